//! Canonical desk-scale experiments, one per rate or comparison being checked.

use std::fmt;
use std::str::FromStr;

use crate::datagen::{EnsembleSpec, NoiseSpec, SnrProfile, SparsitySpec};
use crate::error::{Error, Result};
use crate::train::EstimatorKind;

use super::config::{EpsilonRule, EstimatorSpec, NamedEpsilon, ScaledLogRule, SweepAxis, SweepConfig, SweepSpec};
use super::verify::VerifyConfig;

/// Target-task sample size shared by all sweep presets.
pub const PRESET_N_TARGET: usize = 1000;
const PRESET_SEED: u64 = 1;
const PRESET_TRIALS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    Lemma1RateN,
    Lemma1RateT,
    Thm1L2Snr,
    Thm2LinfSparse,
    Thm3Pseudo,
    Thm4PseudoAdv,
    VerifyClosedForms,
}

impl PresetName {
    pub const ALL: [PresetName; 7] = [
        PresetName::Lemma1RateN,
        PresetName::Lemma1RateT,
        PresetName::Thm1L2Snr,
        PresetName::Thm2LinfSparse,
        PresetName::Thm3Pseudo,
        PresetName::Thm4PseudoAdv,
        PresetName::VerifyClosedForms,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PresetName::Lemma1RateN => "lemma1_rate_n",
            PresetName::Lemma1RateT => "lemma1_rate_T",
            PresetName::Thm1L2Snr => "thm1_l2_snr",
            PresetName::Thm2LinfSparse => "thm2_linf_sparse",
            PresetName::Thm3Pseudo => "thm3_pseudo",
            PresetName::Thm4PseudoAdv => "thm4_pseudo_adv",
            PresetName::VerifyClosedForms => "verify_closed_forms",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL.into_iter().find(|p| p.tag() == s).ok_or_else(|| {
            let names: Vec<&str> = PresetName::ALL.iter().map(|p| p.tag()).collect();
            Error::Config(format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// What a preset runs: one or more sweeps, or the closed-form audit.
#[derive(Debug, Clone, PartialEq)]
pub enum PresetPlan {
    Sweeps(Vec<SweepConfig>),
    Verify(VerifyConfig),
}

impl PresetPlan {
    pub fn sweeps(self) -> Result<Vec<SweepConfig>> {
        match self {
            PresetPlan::Sweeps(s) => Ok(s),
            PresetPlan::Verify(_) => Err(Error::Config(
                "verify_closed_forms is not a sweep; run the verify command".into(),
            )),
        }
    }
}

fn ensemble(p: usize, tasks: usize, snr: SnrProfile, sparsity: SparsitySpec) -> EnsembleSpec {
    EnsembleSpec {
        p,
        r: 4,
        tasks,
        snr,
        sparsity,
        noise: NoiseSpec::default(),
        target_norm: 1.0,
    }
}

fn sweep(
    experiment: &str,
    ensemble: EnsembleSpec,
    axis: SweepAxis,
    values: &[f64],
    estimators: Vec<EstimatorSpec>,
    n_source: usize,
    n_unlabeled: usize,
) -> SweepConfig {
    SweepConfig {
        experiment: experiment.into(),
        ensemble,
        sweep: SweepSpec {
            axis,
            values: values.to_vec(),
        },
        estimators,
        n_source,
        n_target: PRESET_N_TARGET,
        n_unlabeled,
        trials: PRESET_TRIALS,
        seed: PRESET_SEED,
    }
}

fn band_mid_l2() -> EstimatorSpec {
    EstimatorSpec::adversarial(EstimatorKind::AdvL2, EpsilonRule::Named(NamedEpsilon::BandMid))
}

fn log_scaled_linf() -> EstimatorSpec {
    EstimatorSpec::adversarial(
        EstimatorKind::AdvLinf,
        EpsilonRule::ScaledLog(ScaledLogRule { sqrt_log_p_over_n: 2.0 }),
    )
}

pub fn preset(name: PresetName) -> PresetPlan {
    let std = EstimatorSpec::standard;
    let sweeps = match name {
        PresetName::Lemma1RateN => vec![sweep(
            name.tag(),
            ensemble(64, 64, SnrProfile::uniform(1.0), SparsitySpec::dense()),
            SweepAxis::N,
            &[64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0, 4096.0],
            vec![std()],
            64,
            0,
        )],
        PresetName::Lemma1RateT => vec![sweep(
            name.tag(),
            ensemble(128, 16, SnrProfile::uniform(1.0), SparsitySpec::dense()),
            SweepAxis::T,
            &[16.0, 32.0, 64.0, 128.0, 256.0, 512.0],
            vec![std()],
            256,
            0,
        )],
        PresetName::Thm1L2Snr => vec![sweep(
            name.tag(),
            ensemble(100, 80, SnrProfile::two_group(1.0, 4.0, 0.5), SparsitySpec::dense()),
            SweepAxis::Alpha,
            &[4.0, 8.0],
            vec![std(), band_mid_l2()],
            100,
            0,
        )],
        PresetName::Thm2LinfSparse => vec![sweep(
            name.tag(),
            ensemble(128, 64, SnrProfile::uniform(1.0), SparsitySpec::row_sparse(10)),
            SweepAxis::P,
            &[128.0, 512.0, 2048.0],
            vec![std(), log_scaled_linf()],
            128,
            0,
        )],
        PresetName::Thm3Pseudo => vec![sweep(
            name.tag(),
            ensemble(64, 64, SnrProfile::uniform(4.0), SparsitySpec::dense()),
            SweepAxis::NUnlabeled,
            &[0.0, 200.0, 800.0],
            vec![std()],
            50,
            0,
        )],
        PresetName::Thm4PseudoAdv => vec![
            sweep(
                "thm4_pseudo_adv_l2",
                ensemble(100, 80, SnrProfile::two_group(1.0, 8.0, 0.5), SparsitySpec::dense()),
                SweepAxis::NUnlabeled,
                &[800.0],
                vec![std(), band_mid_l2()],
                100,
                800,
            ),
            sweep(
                "thm4_pseudo_adv_linf",
                ensemble(512, 64, SnrProfile::uniform(1.0), SparsitySpec::row_sparse(10)),
                SweepAxis::NUnlabeled,
                &[800.0],
                vec![std(), log_scaled_linf()],
                128,
                800,
            ),
        ],
        PresetName::VerifyClosedForms => return PresetPlan::Verify(VerifyConfig::default()),
    };
    PresetPlan::Sweeps(sweeps)
}
