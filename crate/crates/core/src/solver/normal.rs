use crate::error::{shape_err, Error, Result};
use crate::kruskal::FactorSet;
use crate::multires::Aspect;
use crate::problem::{coarse_mttkrp, AggregationMatrix, CompletionProblem, InterimTensor};
use crate::solver::linear::Cholesky;
use crate::tensor::{hadamard, Matrix, Mode};

/// Joint normal equations of one factor block: the updated factor `F`
/// (`n × R`) solves `F · gram = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquation {
    pub gram: Matrix,
    /// One row per factor row, i.e. the transpose of the `R × n` layout.
    pub rhs: Matrix,
}

/// Gram of the factors that model one tensor along every mode but `skip`.
fn gram_except(grams: [&Matrix; 3], skip: Mode) -> Result<Matrix> {
    let (a, b) = skip.others();
    hadamard(grams[a.index()], grams[b.index()])
}

/// Assembles the normal equations for `target` with coarse weight `lambda`
/// applied on top of each coarse tensor's base weight.
///
/// A fine target combines the interim tensor with every coarse tensor
/// aggregated on another mode. A coarse target with unknown aggregation uses
/// its own coarse tensor only; `lambda` cancels there.
pub fn assemble_normal_equation(
    p: &CompletionProblem,
    fs: &FactorSet,
    target: Aspect,
    lambda: f64,
) -> Result<NormalEquation> {
    let interim = match target {
        Aspect::Fine(_) => {
            let snap = fs.snapshot.as_ref().ok_or(Error::MissingSnapshot)?;
            Some(InterimTensor::new(p.observations(), snap)?)
        }
        Aspect::Coarse(_) => None,
    };
    assemble_with(p, fs, target, lambda, interim.as_ref())
}

pub(crate) fn assemble_with(
    p: &CompletionProblem,
    fs: &FactorSet,
    target: Aspect,
    lambda: f64,
    interim: Option<&InterimTensor<'_>>,
) -> Result<NormalEquation> {
    p.check_factors(fs)?;
    let fine_grams = fs.fine.clone().map(|f| f.gram());
    let fine_refs = [&fine_grams[0], &fine_grams[1], &fine_grams[2]];
    match target {
        Aspect::Fine(mode) => {
            let interim = interim.ok_or(Error::MissingSnapshot)?;
            let (a, b) = mode.others();
            let mut gram = gram_except(fine_refs, mode)?;
            let mut rhs = interim.mttkrp(mode, fs.factor(a), fs.factor(b))?;
            for c in p.coarse().iter().filter(|c| c.mode != mode) {
                let w = lambda * c.weight;
                if w == 0.0 {
                    continue;
                }
                let q = fs.coarse_factor(c.mode).ok_or(Error::MissingCoarse(c.mode.number()))?;
                let qg = q.gram();
                let mut g = fine_refs;
                g[c.mode.index()] = &qg;
                gram.axpy(w, &gram_except(g, mode)?)?;
                rhs.axpy(w, &coarse_mttkrp(p, fs, c.mode, mode)?)?;
            }
            Ok(NormalEquation { gram, rhs })
        }
        Aspect::Coarse(mode) => {
            if p.mode(mode).aggregation.known().is_some() {
                return Err(Error::InvalidArgument(format!(
                    "coarse factor of mode {mode} follows its known aggregation and has no normal equation"
                )));
            }
            let gram = gram_except(fine_refs, mode)?;
            let rhs = coarse_mttkrp(p, fs, mode, mode)?;
            Ok(NormalEquation { gram, rhs })
        }
    }
}

/// Normal equations of a fine factor `F` whose coarse factor is tied to it
/// by a known aggregation `Q = P·F`:
///
/// `F·gram + μ·PᵀP·F·coarse_gram = rhs + μ·Pᵀ·coarse_rhs`
///
/// where `gram` and `rhs` are the untied equations of
/// [`assemble_normal_equation`] and `μ` is the coarse tensor's λ-scaled
/// weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TiedNormalEquation {
    pub base: NormalEquation,
    pub aggregation: AggregationMatrix,
    pub coarse_gram: Matrix,
    /// `J × R` MTTKRP of the coarse tensor along its aggregated mode.
    pub coarse_rhs: Matrix,
    pub weight: f64,
}

impl TiedNormalEquation {
    /// Exact solution with `ridge` added to the diagonal of `gram`.
    ///
    /// `PᵀP` is block diagonal with all-ones blocks, so summing the rows of
    /// one bucket decouples the bucket total, which is solved first; each
    /// row then follows from a system in `gram` alone.
    pub fn solve(&self, ridge: f64) -> Result<Matrix> {
        let agg = &self.aggregation;
        let b = &self.base.rhs;
        let r = self.base.gram.rows();
        if b.rows() != agg.fine_size() || self.coarse_rhs.rows() != agg.coarse_size() {
            return Err(shape_err(
                "TiedNormalEquation::solve",
                (agg.fine_size(), agg.coarse_size()),
                (b.rows(), self.coarse_rhs.rows()),
            ));
        }
        let mu = self.weight;
        let mut members = vec![0usize; agg.coarse_size()];
        let mut totals = self.coarse_rhs.scaled(0.0);
        for (i, &c) in agg.assignment().iter().enumerate() {
            members[c] += 1;
            for (t, &x) in totals.row_mut(c).iter_mut().zip(b.row(i)) {
                *t += x;
            }
        }
        let mut sums = Matrix::zeros(agg.coarse_size(), r);
        for c in 0..agg.coarse_size() {
            let n = members[c] as f64;
            let mut lhs = self.base.gram.clone();
            lhs.axpy(mu * n, &self.coarse_gram)?;
            let mut t = Matrix::from_vec(1, r, totals.row(c).to_vec())?;
            for (x, &m) in t.as_mut_slice().iter_mut().zip(self.coarse_rhs.row(c)) {
                *x += mu * n * m;
            }
            let s = Cholesky::new(&lhs, ridge)?.solve_rows(&t)?;
            sums.row_mut(c).copy_from_slice(s.as_slice());
        }
        // Row i: f_i·gram = b_i + μ·(m_c − s_c·coarse_gram).
        let coupled = sums.matmul(&self.coarse_gram)?;
        let mut rows = b.clone();
        for (i, &c) in agg.assignment().iter().enumerate() {
            for ((x, &m), &g) in rows
                .row_mut(i)
                .iter_mut()
                .zip(self.coarse_rhs.row(c))
                .zip(coupled.row(c))
            {
                *x += mu * (m - g);
            }
        }
        Cholesky::new(&self.base.gram, ridge)?.solve_rows(&rows)
    }
}

/// Tied equations for the fine factor of `mode`, whose aggregation must be
/// known and carry a coarse tensor.
pub fn assemble_tied_equation(
    p: &CompletionProblem,
    fs: &FactorSet,
    mode: Mode,
    lambda: f64,
) -> Result<TiedNormalEquation> {
    let snap = fs.snapshot.as_ref().ok_or(Error::MissingSnapshot)?;
    let interim = InterimTensor::new(p.observations(), snap)?;
    assemble_tied_with(p, fs, mode, lambda, &interim)
}

pub(crate) fn assemble_tied_with(
    p: &CompletionProblem,
    fs: &FactorSet,
    mode: Mode,
    lambda: f64,
    interim: &InterimTensor<'_>,
) -> Result<TiedNormalEquation> {
    let aggregation = p
        .mode(mode)
        .aggregation
        .known()
        .ok_or_else(|| Error::InvalidArgument(format!("mode {mode} has no known aggregation")))?
        .clone();
    let c = p.coarse_on(mode).ok_or(Error::MissingCoarse(mode.number()))?;
    let base = assemble_with(p, fs, Aspect::Fine(mode), lambda, Some(interim))?;
    let grams = fs.fine.clone().map(|f| f.gram());
    let coarse_gram = gram_except([&grams[0], &grams[1], &grams[2]], mode)?;
    let coarse_rhs = coarse_mttkrp(p, fs, mode, mode)?;
    Ok(TiedNormalEquation {
        base,
        aggregation,
        coarse_gram,
        coarse_rhs,
        weight: lambda * c.weight,
    })
}
