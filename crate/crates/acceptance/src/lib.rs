//! Shared pieces of the acceptance suite: the synthetic validation setup and
//! the pass/fail report.

use soco::metrics::{CompletenessConfig, SoundnessConfig};
use soco::perturb::{Imputer, ImputerKind, NoiseScale};
use soco::Exec;

/// Mean fill with unit noise, the per-feature spread of the synthetic data.
pub fn validation_imputer() -> Imputer {
    Imputer::new(ImputerKind::Mean, NoiseScale::Std(1.0))
}

pub fn validation_soundness(seed: u64) -> SoundnessConfig {
    SoundnessConfig { imputer: Some(validation_imputer()), seed, exec: Exec::new(1, 256), ..SoundnessConfig::default() }
}

pub fn validation_completeness(seed: u64) -> CompletenessConfig {
    CompletenessConfig {
        imputer: Some(validation_imputer()),
        seed,
        exec: Exec::new(1, 256),
        ..CompletenessConfig::default()
    }
}

/// Result of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(id: &'static str, title: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Outcome { id, title, passed, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{} {verdict} {}: {}", self.id, self.title, self.detail)
    }
}

/// Prints one line per criterion and the tally; true when all passed.
pub fn report(outcomes: &[Outcome]) -> bool {
    for o in outcomes {
        println!("{}", o.line());
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed} of {} criteria passed", outcomes.len());
    passed == outcomes.len()
}
