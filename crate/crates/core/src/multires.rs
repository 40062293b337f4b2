//! Resolution hierarchy: fine-to-coarse subsampling of problems and
//! coarse-to-fine interpolation of factor solutions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Error, Result};
use crate::kruskal::FactorSet;
use crate::problem::{Aggregation, AggregationMatrix, CoarseTensor, CompletionProblem, ModeKind, ModeSpec};
use crate::tensor::{CooObservations, DenseTensor3, Matrix, Mode};

/// A tensor mode at one granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aspect {
    /// The fine granularity of a mode, shared by observations and by coarse
    /// tensors aggregated elsewhere.
    Fine(Mode),
    /// The coarse granularity of an aggregated mode.
    Coarse(Mode),
}

/// Ordered 0-based indices of an aspect kept at the lower resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectSelection {
    source_size: usize,
    selected: Vec<usize>,
}

impl AspectSelection {
    /// Checks that `selected` is nonempty, strictly increasing and in range.
    pub fn new(source_size: usize, selected: Vec<usize>) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::InvalidSelection("empty selection".into()));
        }
        if selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSelection(format!(
                "indices not strictly increasing: {selected:?}"
            )));
        }
        if let Some(&last) = selected.last() {
            if last >= source_size {
                return Err(Error::InvalidSelection(format!(
                    "index {} beyond aspect size {source_size}",
                    last + 1
                )));
            }
        }
        Ok(AspectSelection { source_size, selected })
    }

    /// Keeps every index.
    pub fn all(n: usize) -> Self {
        AspectSelection {
            source_size: n,
            selected: (0..n).collect(),
        }
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.selected.len() == self.source_size
    }

    /// Inverse map: position of each source index, if selected.
    fn positions(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.source_size];
        for (n, &i) in self.selected.iter().enumerate() {
            pos[i] = Some(n);
        }
        pos
    }

    /// Selection of `self`'s selection: indices of the original aspect.
    pub fn compose(&self, inner: &AspectSelection) -> Result<AspectSelection> {
        if inner.source_size != self.len() {
            return Err(shape_err("AspectSelection::compose", self.len(), inner.source_size));
        }
        Ok(AspectSelection {
            source_size: self.source_size,
            selected: inner.selected.iter().map(|&n| self.selected[n]).collect(),
        })
    }
}

/// The selections applied to every aspect of one problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selections {
    pub fine: [AspectSelection; 3],
    /// Present exactly for the aggregated modes.
    pub coarse: [Option<AspectSelection>; 3],
}

impl Selections {
    pub fn identity(p: &CompletionProblem) -> Self {
        Selections {
            fine: p.shape().map(AspectSelection::all),
            coarse: Mode::ALL.map(|m| p.mode(m).aggregation.coarse_size().map(AspectSelection::all)),
        }
    }

    pub fn get(&self, aspect: Aspect) -> Option<&AspectSelection> {
        match aspect {
            Aspect::Fine(m) => Some(&self.fine[m.index()]),
            Aspect::Coarse(m) => self.coarse[m.index()].as_ref(),
        }
    }
}

/// Regular-interval selection `{1, 3, 5, …}` (0-based `{0, 2, 4, …}`).
pub fn subsample_continuous(n: usize) -> AspectSelection {
    AspectSelection {
        source_size: n,
        selected: (0..n).step_by(2).collect(),
    }
}

/// Number of nonzero stored entries in each slab of `aspect`.
///
/// Fine aspects count the observations and every coarse tensor aggregated on
/// another mode; coarse aspects count their own coarse tensor.
pub fn count_slab_density(p: &CompletionProblem, aspect: Aspect) -> Result<Vec<usize>> {
    match aspect {
        Aspect::Fine(mode) => {
            if p.mode(mode).kind == ModeKind::Continuous {
                return Err(Error::InvalidArgument(format!(
                    "slab density requested for continuous mode {mode}"
                )));
            }
            let m = mode.index();
            let mut counts = vec![0usize; p.shape()[m]];
            for (c, x) in p.observations().iter() {
                if x != 0.0 {
                    counts[c[m]] += 1;
                }
            }
            for c in p.coarse().iter().filter(|c| c.mode != mode) {
                add_tensor_counts(c, mode, &mut counts);
            }
            Ok(counts)
        }
        Aspect::Coarse(mode) => {
            let c = p.coarse_on(mode).ok_or(Error::MissingCoarse(mode.number()))?;
            let mut counts = vec![0usize; c.tensor.dim(mode)];
            add_tensor_counts(c, mode, &mut counts);
            Ok(counts)
        }
    }
}

fn add_tensor_counts(c: &CoarseTensor, mode: Mode, counts: &mut [usize]) {
    let [a, b, d] = c.tensor.shape();
    let m = mode.index();
    for i in 0..a {
        for j in 0..b {
            for (k, &x) in c.tensor.fiber(i, j).iter().enumerate().take(d) {
                if x != 0.0 {
                    counts[[i, j, k][m]] += 1;
                }
            }
        }
    }
}

/// The `⌈n/2⌉` indices with the largest counts, ties to the smaller index,
/// returned in increasing order.
pub fn subsample_categorical(counts: &[usize]) -> AspectSelection {
    let n = counts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut selected: Vec<usize> = order.into_iter().take(n.div_ceil(2)).collect();
    selected.sort_unstable();
    AspectSelection {
        source_size: n,
        selected,
    }
}

/// Selections for one subsampling step of `p`.
///
/// Fine aspects follow their mode kind. Coarse aspects with a known
/// aggregation keep exactly the buckets reached by the fine selection, so the
/// restricted aggregation stays one-hot; those with an unknown aggregation
/// use the categorical rule.
pub fn choose_selections(p: &CompletionProblem) -> Result<Selections> {
    let mut fine = Vec::with_capacity(3);
    for mode in Mode::ALL {
        let spec = p.mode(mode);
        fine.push(match spec.kind {
            ModeKind::Continuous => subsample_continuous(spec.fine_size),
            ModeKind::Categorical => subsample_categorical(&count_slab_density(p, Aspect::Fine(mode))?),
        });
    }
    let fine: [AspectSelection; 3] = fine.try_into().expect("three modes");
    let mut coarse = [None, None, None];
    for mode in Mode::ALL {
        coarse[mode.index()] = match &p.mode(mode).aggregation {
            Aggregation::None => None,
            Aggregation::Known(agg) => Some(reached_buckets(agg, &fine[mode.index()])),
            Aggregation::Unknown { .. } => Some(subsample_categorical(&count_slab_density(p, Aspect::Coarse(mode))?)),
        };
    }
    Ok(Selections { fine, coarse })
}

fn reached_buckets(agg: &AggregationMatrix, fine: &AspectSelection) -> AspectSelection {
    let mut hit = vec![false; agg.coarse_size()];
    for &i in fine.selected() {
        hit[agg.assignment()[i]] = true;
    }
    AspectSelection {
        source_size: agg.coarse_size(),
        selected: (0..hit.len()).filter(|&c| hit[c]).collect(),
    }
}

/// Restricts every stored tensor of `p` to the selected indices.
///
/// Observations off the selection are dropped and the rest re-indexed.
/// Known aggregations are restricted to selected fine indices, dropping
/// selected buckets that end up empty; a selected fine index whose bucket
/// is unselected is an error. The result is validated.
pub fn subsample_problem(p: &CompletionProblem, sel: &Selections) -> Result<CompletionProblem> {
    let shape = p.shape();
    for mode in Mode::ALL {
        let s = &sel.fine[mode.index()];
        if s.source_size != shape[mode.index()] {
            return Err(Error::InvalidSelection(format!(
                "mode {mode} selection covers {} indices, mode has {}",
                s.source_size,
                shape[mode.index()]
            )));
        }
    }

    let pos = sel.fine.clone().map(|s| s.positions());
    let new_shape = sel.fine.clone().map(|s| s.len());
    let entries = p
        .observations()
        .iter()
        .filter_map(|(c, x)| Some(([pos[0][c[0]]?, pos[1][c[1]]?, pos[2][c[2]]?], x)))
        .collect();
    let observations = CooObservations::new_unchecked(new_shape, entries);

    let mut modes: Vec<ModeSpec> = Vec::with_capacity(3);
    let mut coarse = Vec::new();
    for mode in Mode::ALL {
        let spec = p.mode(mode);
        let fine_sel = &sel.fine[mode.index()];
        let aggregation = match &spec.aggregation {
            Aggregation::None => Aggregation::None,
            agg => {
                let csel = sel.coarse[mode.index()].as_ref().ok_or_else(|| {
                    Error::InvalidSelection(format!("no coarse selection for aggregated mode {mode}"))
                })?;
                let j = agg.coarse_size().expect("aggregated");
                if csel.source_size != j {
                    return Err(Error::InvalidSelection(format!(
                        "coarse selection of mode {mode} covers {} indices, aspect has {j}",
                        csel.source_size
                    )));
                }
                let (new_agg, kept, slab_scale) = match agg {
                    Aggregation::Known(m) => {
                        let (restricted, kept) = restrict_aggregation(m, fine_sel, csel, mode)?;
                        let before = bucket_sizes(m);
                        let after = bucket_sizes(&restricted);
                        let scale = kept
                            .iter()
                            .zip(after)
                            .map(|(&c, n)| n as f64 / before[c] as f64)
                            .collect::<Vec<f64>>();
                        (Aggregation::Known(restricted), kept, Some(scale))
                    }
                    _ => (
                        Aggregation::Unknown {
                            coarse_size: csel.len(),
                        },
                        csel.selected.clone(),
                        None,
                    ),
                };
                if let Some(c) = p.coarse_on(mode) {
                    let mut idx: [&[usize]; 3] =
                        [sel.fine[0].selected(), sel.fine[1].selected(), sel.fine[2].selected()];
                    idx[mode.index()] = &kept;
                    let mut tensor = c.tensor.select(idx)?;
                    // A restricted bucket sums fewer fine slabs than the
                    // original one; shrink its slab to the same share.
                    if let Some(scale) = &slab_scale {
                        scale_slabs(&mut tensor, mode, scale);
                    }
                    coarse.push(CoarseTensor {
                        mode,
                        tensor,
                        weight: c.weight,
                    });
                }
                new_agg
            }
        };
        modes.push(ModeSpec {
            kind: spec.kind,
            fine_size: fine_sel.len(),
            aggregation,
        });
    }
    let modes: [ModeSpec; 3] = modes.try_into().expect("three modes");
    CompletionProblem::new(modes, observations, coarse)
}

fn bucket_sizes(agg: &AggregationMatrix) -> Vec<usize> {
    let mut n = vec![0; agg.coarse_size()];
    for &c in agg.assignment() {
        n[c] += 1;
    }
    n
}

fn scale_slabs(t: &mut DenseTensor3, mode: Mode, scale: &[f64]) {
    let [a, b, c] = t.shape();
    for i in 0..a {
        for j in 0..b {
            for k in 0..c {
                let s = scale[[i, j, k][mode.index()]];
                t[(i, j, k)] *= s;
            }
        }
    }
}

/// Restricted aggregation and the original coarse indices it keeps.
fn restrict_aggregation(
    agg: &AggregationMatrix,
    fine: &AspectSelection,
    coarse: &AspectSelection,
    mode: Mode,
) -> Result<(AggregationMatrix, Vec<usize>)> {
    if fine.source_size != agg.fine_size() {
        return Err(shape_err("restrict_aggregation", agg.fine_size(), fine.source_size));
    }
    let cpos = coarse.positions();
    let mut used = vec![false; coarse.len()];
    for &i in fine.selected() {
        let c = agg.assignment()[i];
        match cpos[c] {
            Some(n) => used[n] = true,
            None => {
                return Err(Error::InvalidSelection(format!(
                    "mode {mode}: fine index {} belongs to unselected coarse index {}",
                    i + 1,
                    c + 1
                )))
            }
        }
    }
    let kept: Vec<usize> = coarse
        .selected()
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(&c, _)| c)
        .collect();
    let mut compact = vec![usize::MAX; agg.coarse_size()];
    for (n, &c) in kept.iter().enumerate() {
        compact[c] = n;
    }
    let assignment = fine.selected().iter().map(|&i| compact[agg.assignment()[i]]).collect();
    Ok((AggregationMatrix::new(kept.len(), assignment)?, kept))
}

/// Doubles a regularly subsampled factor: odd rows (1-based) copy, even rows
/// average their neighbours, and a trailing even row copies the last row.
pub fn interpolate_continuous(low: &Matrix, target_rows: usize) -> Result<Matrix> {
    if low.rows() != target_rows.div_ceil(2) {
        return Err(shape_err("interpolate_continuous", target_rows.div_ceil(2), low.rows()));
    }
    let mut out = Matrix::zeros(target_rows, low.cols());
    for t in 0..target_rows {
        let h = t / 2;
        if t % 2 == 0 {
            out.row_mut(t).copy_from_slice(low.row(h));
        } else if h + 1 < low.rows() {
            for ((o, &a), &b) in out.row_mut(t).iter_mut().zip(low.row(h)).zip(low.row(h + 1)) {
                *o = (a + b) / 2.0;
            }
        } else {
            out.row_mut(t).copy_from_slice(low.row(h));
        }
    }
    Ok(out)
}

/// Copies selected rows into place and fills the rest i.i.d. uniform on
/// `[-1, 1]` from a generator seeded with `seed`.
pub fn interpolate_categorical(low: &Matrix, sel: &AspectSelection, target_rows: usize, seed: u64) -> Result<Matrix> {
    if sel.source_size != target_rows {
        return Err(shape_err("interpolate_categorical", target_rows, sel.source_size));
    }
    if low.rows() != sel.len() {
        return Err(shape_err("interpolate_categorical", sel.len(), low.rows()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = sel.positions();
    let mut out = Matrix::zeros(target_rows, low.cols());
    for (t, p) in pos.iter().enumerate() {
        match p {
            Some(n) => out.row_mut(t).copy_from_slice(low.row(*n)),
            None => out.row_mut(t).iter_mut().for_each(|x| *x = rng.gen_range(-1.0..=1.0)),
        }
    }
    Ok(out)
}

/// Mixes a master seed with a level and factor slot (splitmix64 finalizer).
pub fn derive_seed(master: u64, level: usize, slot: usize) -> u64 {
    let mut z =
        master ^ (level as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (slot as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn interpolate_aspect(low: &Matrix, sel: &AspectSelection, kind: ModeKind, seed: u64) -> Result<Matrix> {
    if sel.is_identity() {
        if low.rows() != sel.len() {
            return Err(shape_err("interpolate_solution", sel.len(), low.rows()));
        }
        return Ok(low.clone());
    }
    match kind {
        ModeKind::Continuous if *sel == subsample_continuous(sel.source_size) => {
            interpolate_continuous(low, sel.source_size)
        }
        ModeKind::Continuous => Err(Error::InvalidSelection(
            "continuous aspect was not regularly subsampled".into(),
        )),
        ModeKind::Categorical => interpolate_categorical(low, sel, sel.source_size, seed),
    }
}

/// Lifts a solution of `subsample_problem(p_high, sel)` to `p_high`.
///
/// Fine factors follow their mode kind. Coarse factors of unknown
/// aggregations are lifted by the categorical rule; those of known ones are
/// recomputed as `P · fine`. The snapshot is set to the lifted fine factors.
pub fn interpolate_solution(
    p_high: &CompletionProblem,
    sel: &Selections,
    low_fs: &FactorSet,
    seed: u64,
) -> Result<FactorSet> {
    let mut fine = Vec::with_capacity(3);
    for mode in Mode::ALL {
        let s = &sel.fine[mode.index()];
        if s.source_size != p_high.mode(mode).fine_size {
            return Err(shape_err(
                "interpolate_solution",
                p_high.mode(mode).fine_size,
                s.source_size,
            ));
        }
        fine.push(interpolate_aspect(
            low_fs.factor(mode),
            s,
            p_high.mode(mode).kind,
            derive_seed(seed, 0, mode.index()),
        )?);
    }
    let [u, v, w]: [Matrix; 3] = fine.try_into().expect("three modes");
    let mut fs = FactorSet::new(u, v, w)?;
    for mode in Mode::ALL {
        match &p_high.mode(mode).aggregation {
            Aggregation::None => {}
            Aggregation::Known(agg) => {
                let q = agg.apply(fs.factor(mode))?;
                fs = fs.with_coarse(mode, q)?;
            }
            Aggregation::Unknown { .. } => {
                let s = sel.coarse[mode.index()].as_ref().ok_or_else(|| {
                    Error::InvalidSelection(format!("no coarse selection for aggregated mode {mode}"))
                })?;
                let low = low_fs.coarse_factor(mode).ok_or(Error::MissingCoarse(mode.number()))?;
                let q = interpolate_aspect(low, s, ModeKind::Categorical, derive_seed(seed, 0, 3 + mode.index()))?;
                fs = fs.with_coarse(mode, q)?;
            }
        }
    }
    Ok(fs)
}

/// One level of a hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub problem: CompletionProblem,
    /// Selections that produced this level from the next finer one; `None`
    /// at the finest level.
    pub selections: Option<Selections>,
}

/// Problems ordered coarse to fine; the last level is the original problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionHierarchy {
    pub levels: Vec<Level>,
}

impl ResolutionHierarchy {
    /// Number of subsampling steps.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn finest(&self) -> &CompletionProblem {
        &self.levels.last().expect("nonempty hierarchy").problem
    }

    pub fn coarsest(&self) -> &CompletionProblem {
        &self.levels[0].problem
    }
}

/// Halves every aspect until a fine mode would drop below `min_mode_size`.
pub fn build_hierarchy(p: &CompletionProblem, min_mode_size: usize) -> Result<ResolutionHierarchy> {
    build_hierarchy_limited(p, min_mode_size, None)
}

/// Like [`build_hierarchy`] with at most `max_depth` subsampling steps.
///
/// Also stops early when a subsampled problem fails validation, e.g. when a
/// coarse aspect would no longer be smaller than its fine aspect.
pub fn build_hierarchy_limited(
    p: &CompletionProblem,
    min_mode_size: usize,
    max_depth: Option<usize>,
) -> Result<ResolutionHierarchy> {
    if min_mode_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "min_mode_size must be at least 2, got {min_mode_size}"
        )));
    }
    let mut levels = vec![Level {
        problem: p.clone(),
        selections: None,
    }];
    loop {
        if max_depth.is_some_and(|d| levels.len() > d) {
            break;
        }
        let current = &levels[0].problem;
        if current.shape().iter().any(|&n| n.div_ceil(2) < min_mode_size) {
            break;
        }
        let sel = choose_selections(current)?;
        match subsample_problem(current, &sel) {
            Ok(problem) => levels.insert(
                0,
                Level {
                    problem,
                    selections: Some(sel),
                },
            ),
            Err(Error::InvalidProblem(_)) | Err(Error::InvalidAggregation(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(ResolutionHierarchy { levels })
}
