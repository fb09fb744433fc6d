//! Desk-scale instances of the two benchmark problems and the comparison harness.

mod compare;
mod group_lasso;
mod image;

pub use compare::{
    balanced_scales, compute_reference, compute_reference_with, mean_trace, plan_for, run_comparison, run_single,
    write_mean_csv, Algorithm, ComparisonCell, ComparisonConfig, MeanPoint, ReferenceOptions, SolverParams,
    MEAN_CSV_HEADER,
};
pub use group_lasso::{
    build_exp1_problem, gen_classification_instance, gen_group_cover, GroupLassoInstance, GROUP_STRIDE, GROUP_WIDTH,
};
pub use image::{
    build_exp2_problem, evenly_spaced_rows, gen_image_instance, synthetic_image, ImageRecoveryInstance, BLUR_WEIGHT,
    PIXEL_MAX, ROW_WEIGHT,
};

/// Desk-scale group-lasso classification: `d = 500`, `p = 100`.
pub const EXP1_D: usize = 500;
pub const EXP1_P: usize = 100;
pub const EXP1_ACTIVE_GROUPS: usize = 5;
pub const EXP1_FLIP_RATE: f64 = 0.25;

/// Desk-scale image recovery: `24 x 24` pixels, 6 kept rows, 24 blur blocks.
pub const EXP2_SIDE: usize = 24;
pub const EXP2_Q: usize = 6;
pub const EXP2_S: usize = 24;
pub const EXP2_SNR_MASK_DB: f64 = 28.5;
pub const EXP2_SNR_BLUR_DB: f64 = 27.8;

pub fn desk_exp1(seed: u64) -> crate::Result<(GroupLassoInstance, crate::ProblemSpec)> {
    let inst = gen_classification_instance(EXP1_D, EXP1_P, EXP1_ACTIVE_GROUPS, EXP1_FLIP_RATE, seed)?;
    let spec = build_exp1_problem(&inst)?;
    Ok((inst, spec))
}

pub fn desk_exp2(seed: u64) -> crate::Result<(ImageRecoveryInstance, crate::ProblemSpec)> {
    let inst = gen_image_instance(EXP2_SIDE, EXP2_Q, EXP2_S, EXP2_SNR_MASK_DB, EXP2_SNR_BLUR_DB, seed)?;
    let spec = build_exp2_problem(&inst)?;
    Ok((inst, spec))
}

/// The two benchmark problems at desk scale, with their run presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Exp1,
    Exp2,
}

impl std::str::FromStr for Experiment {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp1" => Ok(Self::Exp1),
            "exp2" => Ok(Self::Exp2),
            other => Err(crate::Error::InvalidConfig(format!("unknown experiment '{other}'"))),
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exp1 => "exp1",
            Self::Exp2 => "exp2",
        })
    }
}

impl Experiment {
    pub fn build(self, seed: u64) -> crate::Result<crate::ProblemSpec> {
        match self {
            Self::Exp1 => desk_exp1(seed).map(|(_, s)| s),
            Self::Exp2 => desk_exp2(seed).map(|(_, s)| s),
        }
    }

    /// Epochs count primal blocks for the classification problem (one
    /// block per group) and coupling blocks for the image problem (`m = 1`).
    pub fn epoch_basis(self) -> crate::EpochBasis {
        match self {
            Self::Exp1 => crate::EpochBasis::Primal,
            Self::Exp2 => crate::EpochBasis::Dual,
        }
    }

    /// Step sizes used for this problem.
    ///
    /// The classification problem has `||L|| ~ 40`, far from the unit scale of
    /// the generic defaults: Douglas-Rachford uses `gamma = 3` and projective
    /// splitting the balanced scales `(1 / ||L||, ||L||)`. The image problem
    /// keeps the generic defaults.
    pub fn params(self, spec: &crate::ProblemSpec) -> SolverParams {
        match self {
            Self::Exp1 => {
                let (ps_gamma, ps_mu) = balanced_scales(spec);
                SolverParams {
                    dr_gamma: 3.0,
                    ps_gamma,
                    ps_mu,
                    ..SolverParams::default()
                }
            }
            Self::Exp2 => SolverParams::default(),
        }
    }
}
