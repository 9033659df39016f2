//! Sweep of the synthetic remove/introduce parameters: for each setting,
//! checks whether Introduce scores strictly below ground truth and Remove in
//! soundness at every aligned accuracy level from 0.6 up, and whether
//! completeness orders them GT >= Introduce. Used to pick the defaults.
//!
//! cargo run --release --example introduce_sweep -- [trials]

use soco::analysis::aggregate_trials;
use soco::io::{modify_stream, trial_data_seed, trial_noise_seed};
use soco::metrics::{completeness_curve, soundness_curve, CompletenessConfig, SoundnessConfig};
use soco::modify::ModScheme;
use soco::perturb::{Imputer, ImputerKind, NoiseScale};
use soco::synthetic::{generate_synthetic, ground_truth_maps, oracle_infos, LinearStepModel, SyntheticSpec};
use soco::{AttributionMap, EvalCurve};

fn main() -> soco::Result<()> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(15);
    let imputer = Some(Imputer::new(ImputerKind::Mean, NoiseScale::Std(1.0)));
    let levels: Vec<f64> = (60..=100).map(|k| k as f64 / 100.0).collect();
    let thresholds: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();

    println!("{:>9}{:>10}  {:>18}  {:>16}", "fraction", "magnitude", "sound: intro below", "compl: GT>=intro");
    for fraction in [0.1, 0.3, 0.5] {
        for magnitude in [0.5, 1.0] {
            let schemes = [None, Some(ModScheme::SynthRemove { fraction }), Some(ModScheme::SynthIntroduce { fraction, magnitude })];
            let mut sound: Vec<Vec<EvalCurve>> = vec![Vec::new(); 3];
            let mut complete: Vec<Vec<EvalCurve>> = vec![Vec::new(); 3];
            for trial in 0..trials {
                let ds = generate_synthetic(&SyntheticSpec { seed: trial_data_seed(1, trial), ..SyntheticSpec::default() })?;
                let gt = ground_truth_maps(&ds)?;
                let infos = oracle_infos(&ds)?;
                let seed = trial_noise_seed(1, trial);
                for (v, scheme) in schemes.iter().enumerate() {
                    let maps: Vec<AttributionMap> = match scheme {
                        None => gt.clone(),
                        Some(s) => gt
                            .iter()
                            .zip(ds.samples())
                            .zip(&infos)
                            .map(|((m, x), i)| s.apply(m, Some(i), modify_stream(1, trial, &s.name(), x.id())))
                            .collect::<soco::Result<_>>()?,
                    };
                    let scfg = SoundnessConfig { imputer, seed, ..SoundnessConfig::default() };
                    let ccfg = CompletenessConfig { imputer, seed, ..CompletenessConfig::default() };
                    sound[v].push(soundness_curve(&LinearStepModel, &ds, &maps, &scfg)?.curve);
                    complete[v].push(completeness_curve(&LinearStepModel, &ds, &maps, &ccfg)?);
                }
            }
            let s: Vec<_> = sound.iter().map(|c| aggregate_trials(c, &levels)).collect::<soco::Result<_>>()?;
            let (mut aligned, mut below) = (0, 0);
            for i in 0..levels.len() {
                if let (Some(g), Some(r), Some(n)) = (s[0].mean[i], s[1].mean[i], s[2].mean[i]) {
                    aligned += 1;
                    below += usize::from(n < g && n < r);
                }
            }
            let c: Vec<_> = complete.iter().map(|c| aggregate_trials(c, &thresholds)).collect::<soco::Result<_>>()?;
            let ordered = (0..thresholds.len()).filter(|&i| c[0].mean[i] >= c[2].mean[i]).count();
            println!("{fraction:>9.1}{magnitude:>10.1}  {:>18}  {:>16}", format!("{below}/{aligned}"), format!("{ordered}/9"));
        }
    }
    Ok(())
}
