//! The sample/hist/threshold/maxsep subcommands.

use std::io::Write;

use xxring::{
    all_pairs, annotate_pairs, build_chain, derive_seed, far_pair_thresholds,
    ground_state_correlations, max_separation_curve, run_ensemble, threshold_scan,
    EnsembleAccumulator, EnsembleConfig, MaxSepPoint, ThresholdEstimate,
};

use crate::config::FileConfig;
use crate::output::{fingerprint_of, histogram_csv, sig12, OutDir};
use crate::{Failure, HistArgs, RunArgs};

/// Run the `[run]` ensemble and write `accumulator.json`, `summary.csv`
/// (full-window runs only), optional `pairs.csv`, and the manifest. The
/// command fails with the numerical exit code if the run logged property
/// violations the config does not explicitly allow, but only after writing
/// everything, so the evidence is on disk.
pub fn sample(cfg: &FileConfig, args: &RunArgs) -> Result<(), Failure> {
    let ec = cfg.ensemble(args)?;
    let acc = run_ensemble(&ec)?;
    let mut out = OutDir::create(&args.out, acc.fingerprint.clone())?;

    // The accumulator already embeds the fingerprint as its own field.
    out.write_json("accumulator.json", &acc)?;
    if ec.max_separation.is_none() {
        out.write_csv("summary.csv", |w| {
            writeln!(
                w,
                "k,seed,m_tangle,q_nl,q_nl_normalized,max_ent_sep,max_nl_sep"
            )?;
            for rec in &acc.records {
                let s = rec.summary.as_ref().expect("full window has summaries");
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    rec.k,
                    rec.seed,
                    sig12(s.m_tangle),
                    s.q_nl,
                    sig12(s.q_nl_normalized),
                    s.max_ent_sep,
                    s.max_nl_sep
                )?;
            }
            Ok(())
        })?;
    } else {
        println!("summary.csv skipped: pair window capped, per-realization measures undefined");
    }
    if args.pairs_csv {
        write_pairs_csv(&mut out, &ec)?;
    }

    report_ensemble(&ec, &acc);
    out.finish("sample", ec.master_seed)?;
    gate_counters(cfg, &acc)
}

/// Re-sweep every realization and stream the pair table. Costs a second
/// pass over the ensemble; the rows are exact repeats of what the
/// accumulator saw, in realization order.
fn write_pairs_csv(out: &mut OutDir, ec: &EnsembleConfig) -> Result<(), Failure> {
    out.write_csv("pairs.csv", |w| {
        writeln!(
            w,
            "k,seed,i,j,separation,cxx,czz,fidelity,concurrence,bell,nonlocal"
        )?;
        for idx in 0..ec.realizations {
            let k = ec.first_realization + idx;
            let seed = derive_seed(ec.master_seed, k);
            let chain = build_chain(ec.model, ec.length, ec.disorder, seed)?;
            let sol = ground_state_correlations(&chain)?;
            let mut sweep = all_pairs(&sol, ec.max_separation)?;
            annotate_pairs(&mut sweep.pairs);
            for p in &sweep.pairs {
                writeln!(
                    w,
                    "{k},{seed},{},{},{},{},{},{},{},{},{}",
                    p.i,
                    p.j,
                    p.separation,
                    sig12(p.cxx),
                    sig12(p.czz),
                    sig12(p.fidelity),
                    sig12(p.concurrence),
                    sig12(p.bell),
                    p.nonlocal
                )?;
            }
        }
        Ok(())
    })
}

fn report_ensemble(ec: &EnsembleConfig, acc: &EnsembleAccumulator) {
    println!(
        "ensemble: {:?} L={} {:?} strength={} N={} (master {})",
        ec.model,
        ec.length,
        ec.disorder.kind,
        ec.disorder.strength,
        acc.realization_count,
        ec.master_seed
    );
    for (name, m) in [("M", &acc.m_tangle), ("2Q_NL/L", &acc.q_nl_normalized)] {
        if let (Some(mean), Some(se)) = (m.mean(), m.std_error()) {
            println!("  {name} = {} +- {}", sig12(mean), sig12(se));
        }
    }
    if let Some(b) = &acc.bootstrap {
        println!(
            "  M 95% bootstrap CI [{}, {}]",
            sig12(b.m_tangle_ci.0),
            sig12(b.m_tangle_ci.1)
        );
    }
    let f = &acc.filtered;
    println!(
        "  filtered pairs: {} admitted, {} entangled, {} nonlocal",
        f.pairs_admitted, f.entangled_pairs, f.nonlocal_pairs
    );
    if let Some(e) = &acc.extremes.max_entangled_separation {
        println!(
            "  max entangled separation {} (seed {}, pair {}-{})",
            e.separation, e.seed, e.i, e.j
        );
    }
    if let Some(e) = &acc.extremes.max_nonlocal_separation {
        println!(
            "  max nonlocal separation {} (seed {}, pair {}-{})",
            e.separation, e.seed, e.i, e.j
        );
    }
    let c = &acc.counters;
    println!(
        "  counters: order={} predicate={} underflow={} ties={} zero-modes={}",
        c.correlator_order_violations,
        c.predicate_disagreements,
        c.det_underflows,
        c.sector_ties,
        c.occupied_zero_modes
    );
}

/// Exit-code gate: physics-surprise counters must be zero unless the config
/// explicitly allows them. Ties and underflows are benign bookkeeping.
fn gate_counters(cfg: &FileConfig, acc: &EnsembleAccumulator) -> Result<(), Failure> {
    let c = &acc.counters;
    if c.predicate_disagreements > 0 {
        return Err(Failure::Numerical(format!(
            "{} nonlocality-predicate disagreements",
            c.predicate_disagreements
        )));
    }
    if c.correlator_order_violations > 0 && !cfg.run.allow_order_violations {
        return Err(Failure::Numerical(format!(
            "{} |cxx| >= |czz| order violations; set allow-order-violations = true \
             if the run deliberately probes fp-degenerate disorder",
            c.correlator_order_violations
        )));
    }
    Ok(())
}

/// Histogram CSVs, either from a fresh ensemble run or from a previously
/// saved accumulator (`--from`). The config must describe the same logical
/// ensemble that produced the accumulator: fingerprints are compared, not
/// trusted.
pub fn hist(cfg: &FileConfig, args: &HistArgs) -> Result<(), Failure> {
    let ec = cfg.ensemble(&args.run)?;
    let acc = match &args.from {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let acc: EnsembleAccumulator = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            if acc.fingerprint != ec.fingerprint() {
                return Err(Failure::Config(format!(
                    "{} was produced by a different ensemble (fingerprint {} vs config {})",
                    path.display(),
                    acc.fingerprint,
                    ec.fingerprint()
                )));
            }
            acc
        }
        None => run_ensemble(&ec)?,
    };
    if acc.histograms.is_empty() {
        return Err(Failure::Config(
            "no histograms: add [[histogram]] sections to the config".into(),
        ));
    }
    let mut out = OutDir::create(&args.run.out, acc.fingerprint.clone())?;
    for (idx, h) in acc.histograms.iter().enumerate() {
        let name = format!("hist_{idx}_{}.csv", h.spec.observable.tag());
        out.write_csv(&name, |w| {
            w.write_all(histogram_csv(h).as_bytes())?;
            Ok(())
        })?;
        println!(
            "histogram {idx} ({}): {} in range, {} outside [{}, {}]",
            h.spec.observable.tag(),
            h.in_range_count(),
            h.out_of_range,
            h.spec.lo,
            h.spec.hi
        );
    }
    out.finish("hist", acc.master_seed)
}

fn report_estimate(tag: &str, est: &ThresholdEstimate) {
    let onset = est.onset.map_or("none".to_string(), |v| sig12(v));
    let lo = est.bracket_low.map_or("open".to_string(), |v| sig12(v));
    let hi = est.bracket_high.map_or("open".to_string(), |v| sig12(v));
    println!(
        "{tag}: onset {} = {onset}, bracket ({lo}, {hi})",
        est.parameter
    );
}

/// Scan the `[threshold]` grid for the onset of the configured predicate,
/// or of both predicates over far pairs when `far-pairs = true`.
pub fn threshold(cfg: &FileConfig, args: &RunArgs) -> Result<(), Failure> {
    let sc = cfg.threshold_scan(args)?;
    let far = cfg.threshold.as_ref().is_some_and(|t| t.far_pairs);
    let mut out = OutDir::create(&args.out, fingerprint_of("threshold", &sc))?;
    if far {
        let (ent, nl) = far_pair_thresholds(&sc)?;
        report_estimate("far entangled", &ent);
        report_estimate("far nonlocal", &nl);
        out.write_report("threshold_entangled.json", &ent)?;
        out.write_report("threshold_nonlocal.json", &nl)?;
    } else {
        let est = threshold_scan(&sc)?;
        report_estimate(est.predicate.tag(), &est);
        out.write_report("threshold.json", &est)?;
    }
    out.finish("threshold", sc.master_seed)
}

/// Largest entangled/nonlocal ring distance observed at each strength in
/// `[maxsep]`.
pub fn maxsep(cfg: &FileConfig, args: &RunArgs) -> Result<(), Failure> {
    let section = cfg
        .maxsep
        .as_ref()
        .ok_or_else(|| Failure::Config("maxsep needs a [maxsep] section".into()))?;
    let r = &cfg.run;
    let realizations = section.realizations.unwrap_or(r.realizations);
    let master = section.master_seed.unwrap_or(r.master_seed);
    let workers = crate::config::resolve_workers(args.workers, r.workers)?;
    let points = max_separation_curve(
        r.model,
        r.length,
        r.disorder.kind,
        &section.strengths,
        realizations,
        master,
        workers,
    )?;
    for p in &points {
        println!(
            "strength {}: max entangled {}, max nonlocal {}",
            p.strength,
            p.max_entangled.map_or(0, |e| e.separation),
            p.max_nonlocal.map_or(0, |e| e.separation)
        );
    }
    let fp = fingerprint_of(
        "maxsep",
        &(
            &r.model,
            r.length,
            r.disorder.kind,
            &section.strengths,
            realizations,
            master,
        ),
    );
    let mut out = OutDir::create(&args.out, fp)?;
    #[derive(serde::Serialize)]
    struct Curve<'a> {
        points: &'a [MaxSepPoint],
    }
    out.write_report("maxsep.json", &Curve { points: &points })?;
    out.finish("maxsep", master)
}
