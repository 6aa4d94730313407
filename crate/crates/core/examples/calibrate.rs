use camtraj_core::cluster::hierarchical_cluster;
use camtraj_core::retrieval::{evaluate_benchmark, RetrieveOptions, SolverKind};
use camtraj_core::simgen::{generate_scenario, inject_time_noise, ScenarioSpec};
use camtraj_core::stmodel::{evaluate_roc_auc, train_st_model};
use camtraj_core::types::FeatureVector;
use camtraj_core::PipelineConfig;
use std::time::Instant;

fn main() {
    let cfg = PipelineConfig::default();
    for seed in [7u64, 8, 9, 10, 11] {
        let t0 = Instant::now();
        let spec = ScenarioSpec {
            seed,
            ..ScenarioSpec::default()
        };
        let scenario = generate_scenario(&spec).unwrap();
        let model = train_st_model(&scenario.st_samples, 400, 0.5, seed).unwrap();
        let eval_spec = ScenarioSpec {
            seed: seed + 1000,
            ..ScenarioSpec::default()
        };
        let eval_scenario = generate_scenario(&eval_spec).unwrap();
        let (_, auc) = evaluate_roc_auc(&model, &eval_scenario.st_samples).unwrap();
        let (_, train_auc) = evaluate_roc_auc(&model, &scenario.st_samples).unwrap();
        println!(
            "seed {seed}: gallery {} tracklets, {} st samples, train AUC {train_auc:.4}, held-out AUC {auc:.4} (gen+train {:?}, epochs_run {})",
            scenario.gallery.len(),
            scenario.st_samples.len(),
            t0.elapsed(),
            model.meta.as_ref().unwrap().epochs_run
        );

        // Embedding geometry diagnostics.
        let features: Vec<FeatureVector> =
            scenario.gallery.iter().map(|t| t.embedding.clone()).collect();
        let mut within = Vec::new();
        let mut cross = Vec::new();
        for i in 0..features.len().min(400) {
            for j in (i + 1)..features.len().min(400) {
                let d = 1.0 - features[i].cosine(&features[j]).unwrap();
                if scenario.gallery[i].identity_id == scenario.gallery[j].identity_id {
                    within.push(d);
                } else {
                    cross.push(d);
                }
            }
        }
        let pct = |v: &mut Vec<f64>, p: f64| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[((v.len() - 1) as f64 * p) as usize]
        };
        println!(
            "  within-dist p10/p50/p90: {:.3}/{:.3}/{:.3}  cross p01/p05/p50: {:.3}/{:.3}/{:.3}",
            pct(&mut within, 0.1),
            pct(&mut within, 0.5),
            pct(&mut within, 0.9),
            pct(&mut cross, 0.01),
            pct(&mut cross, 0.05),
            pct(&mut cross, 0.5),
        );
        let hc = hierarchical_cluster(&features, cfg.hc_threshold).unwrap();
        let mut pure = 0usize;
        for c in &hc.clusters {
            let id0 = &scenario.gallery[c[0]].identity_id;
            if c.iter().all(|&m| &scenario.gallery[m].identity_id == id0) {
                pure += 1;
            }
        }
        println!(
            "  clusters: {} total ({} pure, {} mixed), {} identities",
            hc.len(),
            pure,
            hc.len() - pure,
            spec.n_identities
        );

        // Per-cluster solver diagnostics on the first few clusters.
        use camtraj_core::crf::{build_adjacency_graph, mean_field_refine, prune};
        use camtraj_core::solver::{estimate_k, to_affinity};
        use camtraj_core::stmodel::st_probability;
        let mut psi_by_decile = vec![(0usize, 0.0f64); 10];
        let mut k_no_crf = Vec::new();
        let mut k_crf = Vec::new();
        for c in hc.clusters.iter().take(12) {
            let g = build_adjacency_graph(c, &scenario.gallery, &model, &scenario.network, true)
                .unwrap();
            let gallery = &scenario.gallery;
            let max_dt = c
                .iter()
                .flat_map(|&a| {
                    c.iter()
                        .map(move |&b| (gallery[a].t_start - gallery[b].t_start).abs())
                })
                .fold(0.0f64, f64::max)
                .max(1.0);
            for &a in c {
                for &b in c {
                    if a >= b { continue; }
                    let ta = &scenario.gallery[a];
                    let tb = &scenario.gallery[b];
                    if ta.identity_id != tb.identity_id { continue; }
                    let d = if ta.camera_id == tb.camera_id { 0.0 } else {
                        scenario.network.distance(&ta.camera_id, &tb.camera_id).unwrap()
                    };
                    let dt = (ta.t_start - tb.t_start).abs();
                    let psi = st_probability(&model, d, dt).unwrap();
                    let dec = ((dt / max_dt) * 10.0).min(9.0) as usize;
                    psi_by_decile[dec].0 += 1;
                    psi_by_decile[dec].1 += psi;
                }
            }
            let pruned_raw = prune(g.clone().without_refinement().unwrap(), cfg.kappa).unwrap();
            k_no_crf.push(estimate_k(&to_affinity(&pruned_raw).unwrap(), cfg.varpi).unwrap());
            let refined = mean_field_refine(g, &cfg).unwrap();
            let pruned = prune(refined, cfg.kappa).unwrap();
            k_crf.push(estimate_k(&to_affinity(&pruned).unwrap(), cfg.varpi).unwrap());
        }
        let decile_means: Vec<String> = psi_by_decile
            .iter()
            .map(|&(n, s)| if n > 0 { format!("{:.2}", s / n as f64) } else { "-".into() })
            .collect();
        println!("  within-pair psi by dt decile: {}", decile_means.join(" "));
        println!("  per-cluster K (sizes {:?}): no-crf {:?} / crf {:?}",
            hc.clusters.iter().take(12).map(Vec::len).collect::<Vec<_>>(),
            k_no_crf, k_crf);

        let m4 = RetrieveOptions::default();
        let m0 = RetrieveOptions {
            solver: SolverKind::None,
            ..RetrieveOptions::default()
        };
        let m2 = RetrieveOptions {
            use_crf: false,
            ..RetrieveOptions::default()
        };
        let tracklet_only = RetrieveOptions {
            solver: SolverKind::None,
            rerank: false,
            ..RetrieveOptions::default()
        };
        for (name, options) in [
            ("V-to-V ", &tracklet_only),
            ("M0 clus", &m0),
            ("M2 rnmf", &m2),
            ("M4 crf+rnmf", &m4),
        ] {
            let t1 = Instant::now();
            let outcome = evaluate_benchmark(
                &scenario.probes,
                &scenario.gallery,
                &scenario.ground_truth,
                &scenario.network,
                &model,
                &cfg,
                options,
                20,
            )
            .unwrap();
            println!(
                "  {name}: mAP {:.4}  rank1 {:.4}  TRS {:.4}  ANOPN {:.3}  ({:?})",
                outcome.report.map,
                outcome.report.cmc.first().copied().unwrap_or(0.0),
                outcome.report.trs,
                outcome.report.anopn,
                t1.elapsed()
            );
        }

        // Noise robustness: level 0 vs 60 minutes, 3 repeats each.
        for level in [0.0, 60.0] {
            let mut map_sum = 0.0;
            for rep in 0..3u64 {
                let noisy = inject_time_noise(&scenario.gallery, level, seed * 100 + rep);
                let outcome = evaluate_benchmark(
                    &scenario.probes,
                    &noisy,
                    &scenario.ground_truth,
                    &scenario.network,
                    &model,
                    &cfg,
                    &m4,
                    20,
                )
                .unwrap();
                map_sum += outcome.report.map;
            }
            println!("  noise {level:>4} min: mAP {:.4}", map_sum / 3.0);
        }
    }
}
