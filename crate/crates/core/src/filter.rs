//! Particle filter over the lumped error parameters `(b, w)`.
//!
//! Weights live in log space. Every random draw comes from
//! [`rng::stream`](crate::rng::stream) keyed by `(seed, frame, particle)`, so
//! results do not depend on how rayon schedules the per-particle work.

use nalgebra::{Matrix6, SymmetricEigen, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{DetectionFrame, ExtractionParams, RansacParams};
use crate::observation::{
    extract_evidence, IntensityObsParams, ObservationModelKind, PolarObsParams,
};
use crate::pose::{antipodal_axis_angle, LumpedErrorParams};
use crate::rng::{stream, Domain};
use crate::scene::Scene;
use crate::GeometryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("invalid filter configuration: {0}")]
    InvalidConfig(String),
    #[error("every particle projects the shaft invalidly")]
    AllParticlesInvalid,
    #[error("all particle weights are zero")]
    DegenerateWeights,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive semi-definite 6x6 covariance over `(b, w)`.
///
/// In JSON either `{"diag": [6 values]}` or six rows of six values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCovariance", into = "RawCovariance")]
pub struct Covariance6 {
    matrix: Matrix6<f64>,
    sqrt: Matrix6<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
#[allow(clippy::large_enum_variant)]
enum RawCovariance {
    Diag { diag: [f64; 6] },
    Full([[f64; 6]; 6]),
}

impl TryFrom<RawCovariance> for Covariance6 {
    type Error = FilterError;

    fn try_from(raw: RawCovariance) -> Result<Self, Self::Error> {
        match raw {
            RawCovariance::Diag { diag } => Self::diagonal(diag),
            RawCovariance::Full(rows) => Self::new(Matrix6::from_fn(|i, j| rows[i][j])),
        }
    }
}

impl From<Covariance6> for RawCovariance {
    fn from(c: Covariance6) -> Self {
        let m = c.matrix;
        if m == Matrix6::from_diagonal(&m.diagonal()) {
            RawCovariance::Diag {
                diag: std::array::from_fn(|i| m[(i, i)]),
            }
        } else {
            RawCovariance::Full(std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])))
        }
    }
}

impl Covariance6 {
    pub fn new(matrix: Matrix6<f64>) -> Result<Self, FilterError> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(FilterError::InvalidConfig(
                "covariance has non-finite entries".into(),
            ));
        }
        let asym = (matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(FilterError::InvalidConfig(format!(
                "covariance asymmetric by {asym:e}"
            )));
        }
        let eig = SymmetricEigen::new(matrix);
        if let Some(min) = eig
            .eigenvalues
            .iter()
            .copied()
            .reduce(f64::min)
            .filter(|&m| m < -SYMMETRY_TOL)
        {
            return Err(FilterError::InvalidConfig(format!(
                "covariance eigenvalue {min:e} < 0"
            )));
        }
        let scale = Matrix6::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        Ok(Self {
            matrix,
            sqrt: eig.eigenvectors * scale,
        })
    }

    pub fn diagonal(diag: [f64; 6]) -> Result<Self, FilterError> {
        Self::new(Matrix6::from_diagonal(&Vector6::from(diag)))
    }

    pub fn zero() -> Self {
        Self {
            matrix: Matrix6::zeros(),
            sqrt: Matrix6::zeros(),
        }
    }

    /// `[b_var; 3]` then `[w_var; 3]` on the diagonal.
    pub fn isotropic(b_var: f64, w_var: f64) -> Result<Self, FilterError> {
        Self::diagonal([b_var, b_var, b_var, w_var, w_var, w_var])
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.matrix
    }

    /// One zero-mean draw.
    pub fn sample(&self, rng: &mut impl Rng) -> Vector6<f64> {
        let z = Vector6::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        self.sqrt * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionParams {
    pub cov: Covariance6,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            cov: Covariance6::isotropic(1e-6, 1e-6).expect("valid default"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub n_particles: usize,
    pub resample_ess_fraction: f64,
    pub seed: u64,
    pub init_mean: LumpedErrorParams,
    pub init_cov: Covariance6,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n_particles: 500,
            resample_ess_fraction: 0.5,
            seed: 0,
            init_mean: LumpedErrorParams::zero(),
            init_cov: Covariance6::isotropic(1e-4, 1e-4).expect("valid default"),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        if self.n_particles == 0 {
            return Err(FilterError::InvalidConfig(
                "n_particles must be at least 1".into(),
            ));
        }
        if !(self.resample_ess_fraction > 0.0 && self.resample_ess_fraction <= 1.0) {
            return Err(FilterError::InvalidConfig(format!(
                "resample_ess_fraction {} not in (0, 1]",
                self.resample_ess_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub params: LumpedErrorParams,
    pub log_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet(Vec<Particle>);

impl ParticleSet {
    pub fn new(particles: Vec<Particle>) -> Self {
        Self(particles)
    }

    pub fn particles(&self) -> &[Particle] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Weights normalized to sum to one.
    pub fn normalized_weights(&self) -> Result<Vec<f64>, FilterError> {
        let max = self
            .0
            .iter()
            .map(|p| p.log_weight)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(FilterError::DegenerateWeights);
        }
        let w: Vec<f64> = self.0.iter().map(|p| (p.log_weight - max).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / total).collect())
    }

    fn best_index(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| p.log_weight > f64::NEG_INFINITY)
            .fold(None, |best: Option<(usize, f64)>, (i, p)| match best {
                Some((_, lw)) if lw >= p.log_weight => best,
                _ => Some((i, p.log_weight)),
            })
            .map(|(i, _)| i)
    }
}

fn perturb(params: &LumpedErrorParams, delta: &Vector6<f64>) -> LumpedErrorParams {
    LumpedErrorParams::from_vector(&(params.to_vector() + delta))
}

/// Draws `n_particles` samples from `N(init_mean, init_cov)` with equal weights.
pub fn initialize(cfg: &FilterConfig) -> Result<ParticleSet, FilterError> {
    cfg.validate()?;
    let particles = (0..cfg.n_particles)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, Domain::FilterInit, 0, i as u32);
            Particle {
                params: perturb(&cfg.init_mean, &cfg.init_cov.sample(&mut rng)),
                log_weight: 0.0,
            }
        })
        .collect();
    Ok(ParticleSet(particles))
}

/// Additive Gaussian motion for step `frame`; weights are carried over.
pub fn predict(ps: &ParticleSet, mp: &MotionParams, seed: u64, frame: u32) -> ParticleSet {
    let particles =
        ps.0.par_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut rng = stream(seed, Domain::Motion, frame, i as u32);
                Particle {
                    params: perturb(&p.params, &mp.cov.sample(&mut rng)),
                    log_weight: p.log_weight,
                }
            })
            .collect();
    ParticleSet(particles)
}

/// Everything an update needs besides the particles and the frame.
#[derive(Debug, Clone, Copy)]
pub struct ObservationSetup<'a> {
    pub scene: &'a Scene,
    pub kind: ObservationModelKind,
    pub extraction: &'a ExtractionParams,
    pub ransac: &'a RansacParams,
    pub polar: &'a PolarObsParams,
    pub intensity: &'a IntensityObsParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub particles: ParticleSet,
    /// The frame carried no evidence for this model; weights are unchanged.
    pub skipped: bool,
}

/// Weights particles by the frame. RANSAC (for polar models) runs once here,
/// seeded by `setup.ransac.seed`, and is shared by all particles.
pub fn update(
    ps: &ParticleSet,
    frame: &DetectionFrame,
    q: &[f64],
    setup: &ObservationSetup<'_>,
) -> Result<UpdateOutcome, FilterError> {
    let chain = setup.scene.chain();
    if q.len() != chain.len() {
        return Err(GeometryError::JointCountMismatch {
            expected: chain.len(),
            got: q.len(),
        }
        .into());
    }
    let evidence = extract_evidence(setup.kind, frame, setup.extraction, setup.ransac);
    if evidence.is_skip() {
        return Ok(UpdateOutcome {
            particles: ps.clone(),
            skipped: true,
        });
    }
    let mut particles: Vec<Particle> = ps
        .0
        .par_iter()
        .map(|p| {
            let log_weight = match setup.scene.project_edges(q, &p.params) {
                Ok(edges) => p.log_weight + evidence.score(&edges, setup.polar, setup.intensity),
                Err(_) => f64::NEG_INFINITY,
            };
            Particle {
                params: p.params,
                log_weight,
            }
        })
        .collect();
    let max = particles
        .iter()
        .map(|p| p.log_weight)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(FilterError::AllParticlesInvalid);
    }
    for p in &mut particles {
        p.log_weight -= max;
    }
    Ok(UpdateOutcome {
        particles: ParticleSet(particles),
        skipped: false,
    })
}

pub fn effective_sample_size(ps: &ParticleSet) -> Result<f64, FilterError> {
    let w = ps.normalized_weights()?;
    Ok(1.0 / w.iter().map(|x| x * x).sum::<f64>())
}

/// Low-variance resampling from one uniform offset drawn for step `frame`.
pub fn resample_systematic(
    ps: &ParticleSet,
    seed: u64,
    frame: u32,
) -> Result<ParticleSet, FilterError> {
    let w = ps.normalized_weights()?;
    let n = w.len();
    let u0: f64 = stream(seed, Domain::Resample, frame, 0).random();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = w[0];
    let mut i = 0;
    for k in 0..n {
        let u = (u0 + k as f64) / n as f64;
        while u >= cumulative && i + 1 < n {
            i += 1;
            cumulative += w[i];
        }
        out.push(Particle {
            params: ps.0[i].params,
            log_weight: 0.0,
        });
    }
    Ok(ParticleSet(out))
}

/// Weighted mean of `b`, and of `w` after moving every sample onto the
/// axis-angle chart of the heaviest particle.
pub fn estimate(ps: &ParticleSet) -> Result<LumpedErrorParams, FilterError> {
    let weights = ps.normalized_weights()?;
    let best = ps.best_index().ok_or(FilterError::DegenerateWeights)?;
    let w_ref = *ps.0[best].params.w();
    let (b, w) = ps.0.iter().zip(&weights).fold(
        (nalgebra::Vector3::zeros(), nalgebra::Vector3::zeros()),
        |(b, w), (p, &wt)| {
            let wi = *p.params.w();
            let flipped = antipodal_axis_angle(&wi);
            let aligned = if (flipped - w_ref).norm() < (wi - w_ref).norm() {
                flipped
            } else {
                wi
            };
            (b + p.params.b() * wt, w + aligned * wt)
        },
    );
    Ok(LumpedErrorParams::new(b, w))
}
