//! The completion-problem data model: partial observations, coarse tensors,
//! per-mode specifications, objective evaluation and the implicit
//! interim-tensor MTTKRP.

use std::fmt;

use crate::error::{shape_err, Coord, Error, Result};
use crate::kruskal::{kruskal_residual_sq, FactorSet};
use crate::tensor::{mttkrp_dense, mttkrp_sparse, CooObservations, DenseTensor3, Matrix, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    /// Ordered, smooth index (dates, sorted positions).
    Continuous,
    /// Unordered labels (locations, codes).
    Categorical,
}

/// Binary coarse-from-fine map. Column `i` of the `J × I` matrix is the
/// one-hot vector of `assignment[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationMatrix {
    coarse_size: usize,
    assignment: Vec<usize>,
}

impl AggregationMatrix {
    /// `assignment[i]` is the 0-based coarse index of fine index `i`.
    pub fn new(coarse_size: usize, assignment: Vec<usize>) -> Result<Self> {
        let fine = assignment.len();
        if coarse_size == 0 || coarse_size >= fine {
            return Err(Error::InvalidAggregation(format!(
                "coarse size {coarse_size} must be positive and below fine size {fine}"
            )));
        }
        let mut members = vec![0usize; coarse_size];
        for (i, &c) in assignment.iter().enumerate() {
            if c >= coarse_size {
                return Err(Error::InvalidAggregation(format!(
                    "fine index {} maps to coarse index {} > {coarse_size}",
                    i + 1,
                    c + 1
                )));
            }
            members[c] += 1;
        }
        if let Some(empty) = members.iter().position(|&n| n == 0) {
            return Err(Error::InvalidAggregation(format!(
                "coarse index {} has no fine index",
                empty + 1
            )));
        }
        Ok(AggregationMatrix {
            coarse_size,
            assignment,
        })
    }

    pub fn coarse_size(&self) -> usize {
        self.coarse_size
    }

    pub fn fine_size(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Dense `J × I` 0/1 matrix.
    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.coarse_size, self.fine_size());
        for (i, &c) in self.assignment.iter().enumerate() {
            m[(c, i)] = 1.0;
        }
        m
    }

    /// `P · f`: sums the rows of a fine factor into coarse buckets.
    pub fn apply(&self, f: &Matrix) -> Result<Matrix> {
        if f.rows() != self.fine_size() {
            return Err(shape_err("AggregationMatrix::apply", self.fine_size(), f.rows()));
        }
        let mut out = Matrix::zeros(self.coarse_size, f.cols());
        for (i, &c) in self.assignment.iter().enumerate() {
            for (o, &x) in out.row_mut(c).iter_mut().zip(f.row(i)) {
                *o += x;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Aggregation {
    None,
    Known(AggregationMatrix),
    Unknown { coarse_size: usize },
}

impl Aggregation {
    pub fn coarse_size(&self) -> Option<usize> {
        match self {
            Aggregation::None => None,
            Aggregation::Known(p) => Some(p.coarse_size()),
            Aggregation::Unknown { coarse_size } => Some(*coarse_size),
        }
    }

    pub fn known(&self) -> Option<&AggregationMatrix> {
        match self {
            Aggregation::Known(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub kind: ModeKind,
    pub fine_size: usize,
    pub aggregation: Aggregation,
}

impl ModeSpec {
    pub fn single(kind: ModeKind, fine_size: usize) -> Self {
        ModeSpec {
            kind,
            fine_size,
            aggregation: Aggregation::None,
        }
    }

    pub fn aggregated(kind: ModeKind, fine_size: usize, aggregation: Aggregation) -> Self {
        ModeSpec {
            kind,
            fine_size,
            aggregation,
        }
    }
}

/// A tensor aggregated along one mode, with its base weight in the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseTensor {
    pub mode: Mode,
    pub tensor: DenseTensor3,
    pub weight: f64,
}

/// One violated problem invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyMode {
        mode: Mode,
    },
    ObservationShape {
        expected: [usize; 3],
        found: [usize; 3],
    },
    ObservationOutOfRange {
        index: [usize; 3],
    },
    DuplicateObservation(Coord),
    NonFiniteObservation(Coord),
    DuplicateCoarse {
        mode: Mode,
    },
    CoarseWithoutAggregation {
        mode: Mode,
    },
    AggregationWithoutCoarse {
        mode: Mode,
    },
    CoarseNotSmaller {
        mode: Mode,
        coarse: usize,
        fine: usize,
    },
    AggregationFineSize {
        mode: Mode,
        expected: usize,
        found: usize,
    },
    CoarseShape {
        mode: Mode,
        expected: [usize; 3],
        found: [usize; 3],
    },
    NonFiniteCoarse {
        mode: Mode,
    },
    InvalidWeight {
        mode: Mode,
        weight: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EmptyMode { mode } => write!(f, "mode {mode} has size 0"),
            ObservationShape { expected, found } => {
                write!(f, "observation shape {found:?} differs from problem shape {expected:?}")
            }
            ObservationOutOfRange { index } => write!(f, "observation index {index:?} out of range"),
            DuplicateObservation(c) => write!(f, "duplicate observation at {c}"),
            NonFiniteObservation(c) => write!(f, "non-finite observation at {c}"),
            DuplicateCoarse { mode } => write!(f, "more than one coarse tensor aggregates mode {mode}"),
            CoarseWithoutAggregation { mode } => {
                write!(
                    f,
                    "coarse tensor on mode {mode} but mode {mode} declares no aggregation"
                )
            }
            AggregationWithoutCoarse { mode } => {
                write!(f, "mode {mode} declares an aggregation but has no coarse tensor")
            }
            CoarseNotSmaller { mode, coarse, fine } => {
                write!(f, "mode {mode}: coarse size {coarse} is not below fine size {fine}")
            }
            AggregationFineSize { mode, expected, found } => write!(
                f,
                "mode {mode}: aggregation covers {found} fine indices, mode has {expected}"
            ),
            CoarseShape { mode, expected, found } => write!(
                f,
                "coarse tensor on mode {mode} has shape {found:?}, expected {expected:?}"
            ),
            NonFiniteCoarse { mode } => write!(f, "coarse tensor on mode {mode} has non-finite entries"),
            InvalidWeight { mode, weight } => {
                write!(f, "coarse tensor on mode {mode} has invalid weight {weight}")
            }
        }
    }
}

/// Partial and coarse observations of one unknown tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionProblem {
    modes: [ModeSpec; 3],
    observations: CooObservations,
    coarse: Vec<CoarseTensor>,
}

impl CompletionProblem {
    /// Builds and validates a problem. Coarse tensors are ordered by mode.
    pub fn new(modes: [ModeSpec; 3], observations: CooObservations, coarse: Vec<CoarseTensor>) -> Result<Self> {
        let p = Self::new_unchecked(modes, observations, coarse);
        p.validate().map_err(Error::InvalidProblem)?;
        Ok(p)
    }

    /// Builds a problem without checking it; see [`CompletionProblem::validate`].
    pub fn new_unchecked(modes: [ModeSpec; 3], observations: CooObservations, mut coarse: Vec<CoarseTensor>) -> Self {
        coarse.sort_by_key(|c| c.mode);
        CompletionProblem {
            modes,
            observations,
            coarse,
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        [
            self.modes[0].fine_size,
            self.modes[1].fine_size,
            self.modes[2].fine_size,
        ]
    }

    pub fn modes(&self) -> &[ModeSpec; 3] {
        &self.modes
    }

    pub fn mode(&self, mode: Mode) -> &ModeSpec {
        &self.modes[mode.index()]
    }

    pub fn observations(&self) -> &CooObservations {
        &self.observations
    }

    pub fn coarse(&self) -> &[CoarseTensor] {
        &self.coarse
    }

    pub fn coarse_on(&self, mode: Mode) -> Option<&CoarseTensor> {
        self.coarse.iter().find(|c| c.mode == mode)
    }

    /// The same problem with every coarse tensor and aggregation removed.
    pub fn without_coarse(&self) -> CompletionProblem {
        let modes = self.modes.clone().map(|m| ModeSpec::single(m.kind, m.fine_size));
        CompletionProblem::new_unchecked(modes, self.observations.clone(), Vec::new())
    }

    /// Expected shape of the coarse tensor aggregating `mode`.
    pub fn coarse_shape(&self, mode: Mode) -> Option<[usize; 3]> {
        let j = self.mode(mode).aggregation.coarse_size()?;
        let mut s = self.shape();
        s[mode.index()] = j;
        Some(s)
    }

    /// Checks every invariant and returns all violations found.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let shape = self.shape();
        for mode in Mode::ALL {
            let spec = self.mode(mode);
            if spec.fine_size == 0 {
                out.push(Violation::EmptyMode { mode });
            }
            if let Some(j) = spec.aggregation.coarse_size() {
                if j == 0 || j >= spec.fine_size {
                    out.push(Violation::CoarseNotSmaller {
                        mode,
                        coarse: j,
                        fine: spec.fine_size,
                    });
                }
            }
            if let Some(p) = spec.aggregation.known() {
                if p.fine_size() != spec.fine_size {
                    out.push(Violation::AggregationFineSize {
                        mode,
                        expected: spec.fine_size,
                        found: p.fine_size(),
                    });
                }
            }
            let n_coarse = self.coarse.iter().filter(|c| c.mode == mode).count();
            if n_coarse > 1 {
                out.push(Violation::DuplicateCoarse { mode });
            }
            match (n_coarse > 0, spec.aggregation.coarse_size().is_some()) {
                (true, false) => out.push(Violation::CoarseWithoutAggregation { mode }),
                (false, true) => out.push(Violation::AggregationWithoutCoarse { mode }),
                _ => {}
            }
        }

        if self.observations.shape() != shape {
            out.push(Violation::ObservationShape {
                expected: shape,
                found: self.observations.shape(),
            });
        }
        let coords = self.observations.coords();
        for (n, (c, &v)) in coords.iter().zip(self.observations.values()).enumerate() {
            if c.iter().zip(&shape).any(|(&x, &s)| x >= s) {
                out.push(Violation::ObservationOutOfRange {
                    index: Coord::from_zero_based(*c).0,
                });
            }
            if !v.is_finite() {
                out.push(Violation::NonFiniteObservation(Coord::from_zero_based(*c)));
            }
            if n > 0 && coords[n - 1] == *c {
                out.push(Violation::DuplicateObservation(Coord::from_zero_based(*c)));
            }
        }

        for c in &self.coarse {
            if let Some(expected) = self.coarse_shape(c.mode) {
                if c.tensor.shape() != expected {
                    out.push(Violation::CoarseShape {
                        mode: c.mode,
                        expected,
                        found: c.tensor.shape(),
                    });
                }
            }
            if c.tensor.as_slice().iter().any(|x| !x.is_finite()) {
                out.push(Violation::NonFiniteCoarse { mode: c.mode });
            }
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                out.push(Violation::InvalidWeight {
                    mode: c.mode,
                    weight: c.weight,
                });
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Checks that `fs` has the factor shapes this problem needs.
    pub fn check_factors(&self, fs: &FactorSet) -> Result<()> {
        fs.check_rank()?;
        if fs.shape() != self.shape() {
            return Err(shape_err("factor rows", self.shape(), fs.shape()));
        }
        for c in &self.coarse {
            let j = self.mode(c.mode).aggregation.coarse_size().unwrap_or(0);
            match fs.coarse_factor(c.mode) {
                Some(q) if q.rows() == j => {}
                Some(q) => return Err(shape_err("coarse factor rows", j, q.rows())),
                None => return Err(Error::MissingCoarse(c.mode.number())),
            }
        }
        Ok(())
    }

    /// The three factors whose Kruskal tensor models the coarse tensor on
    /// `mode`: the coarse factor at `mode`, fine factors elsewhere.
    pub(crate) fn coarse_model<'a>(&self, fs: &'a FactorSet, mode: Mode) -> Result<[&'a Matrix; 3]> {
        let q = fs.coarse_factor(mode).ok_or(Error::MissingCoarse(mode.number()))?;
        let mut f = [fs.u(), fs.v(), fs.w()];
        f[mode.index()] = q;
        Ok(f)
    }

    /// Unweighted squared residual of each coarse tensor, in mode order.
    pub fn coarse_residuals(&self, fs: &FactorSet) -> Result<Vec<(Mode, f64)>> {
        self.check_factors(fs)?;
        self.coarse
            .iter()
            .map(|c| {
                let [a, b, d] = self.coarse_model(fs, c.mode)?;
                Ok((c.mode, kruskal_residual_sq(&c.tensor, a, b, d)?))
            })
            .collect()
    }
}

/// `Σ (x − [[U, V, W]])²` over observed coordinates.
pub fn observed_loss(p: &CompletionProblem, fs: &FactorSet) -> Result<f64> {
    p.check_factors(fs)?;
    let (u, v, w) = (fs.u(), fs.v(), fs.w());
    Ok(p.observations
        .iter()
        .map(|([i, j, k], x)| {
            let r: f64 = u
                .row(i)
                .iter()
                .zip(v.row(j))
                .zip(w.row(k))
                .map(|((a, b), c)| a * b * c)
                .sum();
            (x - r) * (x - r)
        })
        .sum())
}

/// Weighted coarse terms, e.g. `λ1‖C¹ − [[Q1, V, W]]‖² + λ2‖C² − [[U, Q2, W]]‖²`.
pub fn coarse_loss(p: &CompletionProblem, fs: &FactorSet) -> Result<f64> {
    let residuals = p.coarse_residuals(fs)?;
    Ok(p.coarse.iter().zip(residuals).map(|(c, (_, r))| c.weight * r).sum())
}

/// The interim tensor `M*X + (1−M)*[[U^k, V^k, W^k]]` in implicit form.
///
/// Stores only the observed residuals `x − [[U^k, V^k, W^k]]` so that its
/// MTTKRP splits into a sparse pass plus a low-rank term.
#[derive(Debug, Clone)]
pub struct InterimTensor<'a> {
    snapshot: &'a [Matrix; 3],
    residual: CooObservations,
}

impl<'a> InterimTensor<'a> {
    pub fn new(observations: &CooObservations, snapshot: &'a [Matrix; 3]) -> Result<Self> {
        let [u, v, w] = snapshot;
        let recon = crate::tensor::masked_reconstruction(observations, u, v, w)?;
        let values = observations
            .values()
            .iter()
            .zip(recon.values())
            .map(|(x, r)| x - r)
            .collect();
        Ok(InterimTensor {
            snapshot,
            residual: observations.with_values(values)?,
        })
    }

    /// MTTKRP of the interim tensor along `mode` with the current factors of
    /// the other two modes.
    pub fn mttkrp(&self, mode: Mode, f1: &Matrix, f2: &Matrix) -> Result<Matrix> {
        let (a, b) = mode.others();
        let mut out = mttkrp_sparse(&self.residual, f1, f2, mode)?;
        let s = self.snapshot;
        let g1 = s[a.index()].t_matmul(f1)?;
        let g2 = s[b.index()].t_matmul(f2)?;
        let low_rank = s[mode.index()].matmul(&crate::tensor::hadamard(&g1, &g2)?)?;
        out.axpy(1.0, &low_rank)?;
        Ok(out)
    }
}

/// `(F_a ⊙ F_b)ᵀ X̃_mode ᵀ` transposed, i.e. the `I_mode × R` MTTKRP of the
/// interim tensor built from `fs.snapshot`, against the current factors.
pub fn interim_mttkrp(p: &CompletionProblem, fs: &FactorSet, mode: Mode) -> Result<Matrix> {
    p.check_factors(fs)?;
    let snap = fs.snapshot.as_ref().ok_or(Error::MissingSnapshot)?;
    let (a, b) = mode.others();
    InterimTensor::new(&p.observations, snap)?.mttkrp(mode, fs.factor(a), fs.factor(b))
}

/// MTTKRP of the coarse tensor on `coarse_mode` along `mode`.
pub fn coarse_mttkrp(p: &CompletionProblem, fs: &FactorSet, coarse_mode: Mode, mode: Mode) -> Result<Matrix> {
    let c = p
        .coarse_on(coarse_mode)
        .ok_or(Error::MissingCoarse(coarse_mode.number()))?;
    let f = p.coarse_model(fs, coarse_mode)?;
    let (a, b) = mode.others();
    mttkrp_dense(&c.tensor, f[a.index()], f[b.index()], mode)
}
