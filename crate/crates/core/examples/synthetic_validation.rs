//! Ground-truth maps against randomly thinned (Remove) and padded (Introduce)
//! versions in the synthetic world, scored by soundness and completeness.
//!
//! cargo run --release --example synthetic_validation -- [trials]

use soco::analysis::aggregate_trials;
use soco::io::{modify_stream, trial_data_seed, trial_noise_seed};
use soco::metrics::{completeness_curve, soundness_curve, CompletenessConfig, SoundnessConfig};
use soco::modify::ModScheme;
use soco::perturb::{Imputer, ImputerKind, NoiseScale};
use soco::synthetic::{generate_synthetic, ground_truth_maps, oracle_infos, LinearStepModel, SyntheticSpec};
use soco::{AttributionMap, EvalCurve};

fn main() -> soco::Result<()> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let master = 0;
    // unit noise matches the spread of the N(0, I) features
    let imputer = Some(Imputer::new(ImputerKind::Mean, NoiseScale::Std(1.0)));
    let variants = [("gt", None), ("remove", Some(ModScheme::synth_remove())), ("introduce", Some(ModScheme::synth_introduce()))];

    let mut sound: Vec<Vec<EvalCurve>> = vec![Vec::new(); variants.len()];
    let mut complete: Vec<Vec<EvalCurve>> = vec![Vec::new(); variants.len()];
    for trial in 0..trials {
        let ds = generate_synthetic(&SyntheticSpec { seed: trial_data_seed(master, trial), ..SyntheticSpec::default() })?;
        let gt = ground_truth_maps(&ds)?;
        let infos = oracle_infos(&ds)?;
        let seed = trial_noise_seed(master, trial);
        for (v, (label, scheme)) in variants.iter().enumerate() {
            let maps: Vec<AttributionMap> = match scheme {
                None => gt.clone(),
                Some(s) => gt
                    .iter()
                    .zip(ds.samples())
                    .zip(&infos)
                    .map(|((m, x), info)| s.apply(m, Some(info), modify_stream(master, trial, label, x.id())))
                    .collect::<soco::Result<_>>()?,
            };
            let scfg = SoundnessConfig { imputer, seed, ..SoundnessConfig::default() };
            let ccfg = CompletenessConfig { imputer, seed, ..CompletenessConfig::default() };
            sound[v].push(soundness_curve(&LinearStepModel, &ds, &maps, &scfg)?.curve);
            complete[v].push(completeness_curve(&LinearStepModel, &ds, &maps, &ccfg)?);
        }
    }

    println!("completeness: mean accuracy drop over {trials} trials");
    let thresholds: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    print!("{:>10}", "t");
    for (label, _) in &variants {
        print!("{label:>11}");
    }
    println!();
    let summaries: Vec<_> = complete.iter().map(|c| aggregate_trials(c, &thresholds)).collect::<soco::Result<_>>()?;
    for (i, t) in thresholds.iter().enumerate() {
        print!("{t:>10.1}");
        for s in &summaries {
            print!("{:>11.3}", s.mean[i].unwrap_or(f64::NAN));
        }
        println!();
    }

    println!("\nsoundness: mean over trials at aligned accuracy levels");
    let levels: Vec<f64> = (12..=19).map(|k| k as f64 * 0.05).collect();
    let summaries: Vec<_> = sound.iter().map(|c| aggregate_trials(c, &levels)).collect::<soco::Result<_>>()?;
    for (i, level) in levels.iter().enumerate() {
        print!("{level:>10.2}");
        for s in &summaries {
            match s.mean[i] {
                Some(q) => print!("{q:>11.3}"),
                None => print!("{:>11}", "-"),
            }
        }
        println!();
    }
    Ok(())
}
