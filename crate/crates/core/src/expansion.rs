//! Expansion coefficients, projections `P_j f`, and partial sums taken in a
//! prescribed order.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{Cell, CsvTable};
use crate::families::filter::FilterPair;
use crate::families::{FamilySpec, MraFamily};
use crate::grid::{inner_product, CellMoments, DecayHint, Dilate, DyadicGrid, SampledFunction};
use crate::scalar::Real;

/// Integers `k` for which `g(2^j x - k)` meets the open interval `(a, b)`,
/// where `g` is supported on `support`.
pub fn translate_range<T: Real>(support: (T, T), j: i32, window: (T, T)) -> (i64, i64) {
    let s = T::pow2(j);
    let lo = (s * window.0 - support.1).floor().to_i64().unwrap() + 1;
    let hi = (s * window.1 - support.0).ceil().to_i64().unwrap() - 1;
    (lo, hi)
}

fn check_window<T: Real>(f: &SampledFunction<T>, window: (T, T)) -> Result<()> {
    let (a, b) = f.support();
    if !(window.0 <= window.1) || window.0 < a || window.1 > b {
        return Err(Error::WindowOutsideSupport(
            window.0.to_f64_lossy(),
            window.1.to_f64_lossy(),
        ));
    }
    Ok(())
}

/// Scaling coefficients `b_k = ⟨f, φ_{j0,k}⟩` and detail coefficients
/// `a_{jk} = ⟨f, ψ_{jk}⟩`, `j0 <= j < j1`, for every translate meeting the
/// analysis window.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionCoefficients<T: Real> {
    pub family: FamilySpec,
    pub j0: i32,
    pub j1: i32,
    pub b: BTreeMap<i64, T>,
    pub a: BTreeMap<(i32, i64), T>,
}

impl<T: Real> ExpansionCoefficients<T> {
    /// `Σ b² + Σ a²`.
    pub fn energy(&self) -> T {
        self.b.values().chain(self.a.values()).map(|&v| v * v).sum()
    }

    pub fn len(&self) -> usize {
        self.b.len() + self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty() && self.a.is_empty()
    }

    pub fn get(&self, term: Term) -> Option<T> {
        match term {
            Term::Scaling { k } => self.b.get(&k).copied(),
            Term::Detail { j, k } => self.a.get(&(j, k)).copied(),
        }
    }

    /// Every term, scaling block first, then details by level and translate.
    pub fn terms(&self) -> Vec<Term> {
        self.b
            .keys()
            .map(|&k| Term::Scaling { k })
            .chain(self.a.keys().map(|&(j, k)| Term::Detail { j, k }))
            .collect()
    }

    pub fn to_document(&self) -> CoefficientDocument<T> {
        CoefficientDocument {
            family: self.family.to_string(),
            j0: self.j0,
            j1: self.j1,
            b: self.b.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            a: self
                .a
                .iter()
                .map(|((j, k), v)| (format!("{j},{k}"), *v))
                .collect(),
        }
    }

    pub fn from_document(doc: CoefficientDocument<T>) -> Result<Self> {
        let bad =
            |what: &str| Error::InvalidArgument(format!("malformed coefficient key `{what}`"));
        let b = doc
            .b
            .into_iter()
            .map(|(k, v)| k.parse::<i64>().map(|k| (k, v)).map_err(|_| bad(&k)))
            .collect::<Result<_>>()?;
        let a = doc
            .a
            .into_iter()
            .map(|(key, v)| {
                let (j, k) = key.split_once(',').ok_or_else(|| bad(&key))?;
                let j = j.trim().parse::<i32>().map_err(|_| bad(&key))?;
                let k = k.trim().parse::<i64>().map_err(|_| bad(&key))?;
                Ok(((j, k), v))
            })
            .collect::<Result<_>>()?;
        if doc.j1 <= doc.j0 {
            return Err(Error::InvalidArgument(format!(
                "j1 ({}) must exceed j0 ({})",
                doc.j1, doc.j0
            )));
        }
        Ok(Self {
            family: doc.family.parse()?,
            j0: doc.j0,
            j1: doc.j1,
            b,
            a,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }

    /// Rows `kind, j, k, value`; scaling rows carry `j = j0`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["kind", "j", "k", "value"]);
        for (k, v) in &self.b {
            t.push(vec![
                "scaling".into(),
                self.j0.into(),
                (*k).into(),
                Cell::float(*v),
            ]);
        }
        for ((j, k), v) in &self.a {
            t.push(vec![
                "detail".into(),
                (*j).into(),
                (*k).into(),
                Cell::float(*v),
            ]);
        }
        t
    }
}

/// JSON layout `{family, j0, j1, b: {"k": v}, a: {"j,k": v}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CoefficientDocument<T: Real> {
    pub family: String,
    pub j0: i32,
    pub j1: i32,
    pub b: BTreeMap<String, T>,
    pub a: BTreeMap<String, T>,
}

fn coefficients_at<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    j: i32,
    window: (T, T),
) -> Vec<(i64, T)> {
    let (lo, hi) = translate_range(g.support(), j, window);
    let moments = CellMoments::new(g, f.grid().level() - j);
    (lo..=hi)
        .into_par_iter()
        .map(|k| {
            let v = moments
                .as_ref()
                .and_then(|m| m.pair(f, j, k))
                .unwrap_or_else(|| inner_product(f, &Dilate::new(g, j, k)));
            (k, v)
        })
        .collect()
}

/// `|⟨f, g_{jk}⟩| <= 2^{-j/2} ‖f‖_∞ ‖g‖_1`, checked with rounding slack.
fn check_bound<T: Real>(name: &'static str, value: T, j: i32, f_sup: T, g_l1: T) -> Result<()> {
    let bound = T::pow2(-j).sqrt() * f_sup * g_l1;
    if value.abs() > bound * (T::one() + T::tol(1e-9)) + T::tol(1e-12) {
        return Err(Error::InvariantFailure {
            name,
            detail: format!("|{value:e}| exceeds 2^(-j/2) ‖f‖∞ ‖g‖₁ = {bound:e} at j={j}"),
        });
    }
    Ok(())
}

/// Expansion coefficients of `f` over levels `j0 .. j1` for translates meeting
/// `window`. Families with a finite filter get their coarse coefficients from
/// the level-`j1` scaling coefficients through the filter bank, so the
/// partial sums telescope to `P_{j1} f` up to rounding; the others pair `f`
/// with every dilate directly.
pub fn analyze<T: Real>(
    f: &SampledFunction<T>,
    fam: &MraFamily<T>,
    j0: i32,
    j1: i32,
    window: (T, T),
) -> Result<ExpansionCoefficients<T>> {
    if j1 <= j0 {
        return Err(Error::InvalidArgument(format!(
            "j1 ({j1}) must exceed j0 ({j0})"
        )));
    }
    check_window(f, window)?;
    let (b, a) = match fam.filter().filter(|_| fam.is_compact()) {
        Some(filter) => pyramid(f, fam, filter, j0, j1, window),
        None => {
            let b: BTreeMap<i64, T> = coefficients_at(f, fam.phi(), j0, window)
                .into_iter()
                .collect();
            let mut a = BTreeMap::new();
            for j in j0..j1 {
                for (k, v) in coefficients_at(f, fam.psi(), j, window) {
                    a.insert((j, k), v);
                }
            }
            (b, a)
        }
    };
    let f_sup = f.sup_norm();
    let phi_l1 = fam.phi().norm_l1();
    let psi_l1 = fam.psi().norm_l1();
    for &v in b.values() {
        check_bound("scaling coefficient bound", v, j0, f_sup, phi_l1)?;
    }
    for (&(j, _), &v) in &a {
        check_bound("detail coefficient bound", v, j, f_sup, psi_l1)?;
    }
    Ok(ExpansionCoefficients {
        family: fam.spec(),
        j0,
        j1,
        b,
        a,
    })
}

type Coefficients<T> = (BTreeMap<i64, T>, BTreeMap<(i32, i64), T>);

/// `b_{jk} = Σ_n h_n b_{j+1,2k+n}` and `a_{jk} = Σ_n g_n b_{j+1,2k+n}`,
/// starting from inner products at level `j1` over every translate the
/// recursion reaches.
fn pyramid<T: Real>(
    f: &SampledFunction<T>,
    fam: &MraFamily<T>,
    filter: &FilterPair<T>,
    j0: i32,
    j1: i32,
    window: (T, T),
) -> Coefficients<T> {
    let (lo, hi) = filter.index_range();
    let phi_range = |j| translate_range(fam.phi().support(), j, window);
    let psi_range = |j| translate_range(fam.psi().support(), j, window);
    let hull = |a: (i64, i64), b: (i64, i64)| (a.0.min(b.0), a.1.max(b.1));
    // Translates needed at each level, from j0 up to j1.
    let mut needed = vec![hull(phi_range(j0), psi_range(j0))];
    for j in j0 + 1..=j1 {
        let below = needed[needed.len() - 1];
        let children = (2 * below.0 + lo, 2 * below.1 + hi);
        needed.push(if j < j1 {
            hull(children, psi_range(j))
        } else {
            children
        });
    }
    let (top_lo, top_hi) = needed[needed.len() - 1];
    let moments = CellMoments::new(fam.phi(), f.grid().level() - j1);
    let mut fine: Vec<T> = (top_lo..=top_hi)
        .into_par_iter()
        .map(|k| {
            moments
                .as_ref()
                .and_then(|m| m.pair(f, j1, k))
                .unwrap_or_else(|| inner_product(f, &Dilate::new(fam.phi(), j1, k)))
        })
        .collect();
    let mut fine_lo = top_lo;
    let mut a = BTreeMap::new();
    for j in (j0..j1).rev() {
        let (k_lo, k_hi) = needed[(j - j0) as usize];
        let apply = |taps: &[T], k: i64| -> T {
            taps.iter()
                .enumerate()
                .map(|(i, &t)| t * fine[(2 * k + lo + i as i64 - fine_lo) as usize])
                .sum()
        };
        let (d_lo, d_hi) = psi_range(j);
        for k in d_lo..=d_hi {
            a.insert((j, k), apply(filter.highpass(), k));
        }
        let coarse: Vec<T> = (k_lo..=k_hi).map(|k| apply(filter.lowpass(), k)).collect();
        fine = coarse;
        fine_lo = k_lo;
    }
    let (b_lo, b_hi) = phi_range(j0);
    let b = (b_lo..=b_hi)
        .map(|k| (k, fine[(k - fine_lo) as usize]))
        .collect();
    (b, a)
}

/// `P_j f` held as its scaling coefficients over a window.
#[derive(Clone, Debug)]
pub struct Projection<'a, T: Real> {
    fam: &'a MraFamily<T>,
    j: i32,
    coefficients: BTreeMap<i64, T>,
}

impl<'a, T: Real> Projection<'a, T> {
    /// Coefficients of every `φ_{jk}` that is nonzero somewhere on `window`.
    pub fn new(
        f: &SampledFunction<T>,
        fam: &'a MraFamily<T>,
        j: i32,
        window: (T, T),
    ) -> Result<Self> {
        check_window(f, window)?;
        let coefficients = coefficients_at(f, fam.phi(), j, window)
            .into_iter()
            .collect();
        Ok(Self {
            fam,
            j,
            coefficients,
        })
    }

    pub fn level(&self) -> i32 {
        self.j
    }

    pub fn coefficients(&self) -> &BTreeMap<i64, T> {
        &self.coefficients
    }

    /// `Σ_k b_k φ_{jk}(x)`; exact inside the window it was built for.
    pub fn eval(&self, x: T) -> T {
        let phi = self.fam.phi();
        let (lo, hi) = translate_range(phi.support(), self.j, (x, x));
        self.coefficients
            .range(lo - 1..=hi + 1)
            .map(|(&k, &b)| b * Dilate::new(phi, self.j, k).eval(x))
            .sum()
    }

    pub fn tabulate(&self, xs: DyadicGrid<T>) -> Result<SampledFunction<T>> {
        let values: Vec<T> = (0..xs.count())
            .into_par_iter()
            .map(|i| self.eval(xs.point(i)))
            .collect();
        SampledFunction::new(xs, values, DecayHint::None, self.fam.phi().interpolation())
    }
}

/// `(P_j f)(x) = Σ_k ⟨f, φ_{jk}⟩ φ_{jk}(x)` tabulated on `xs`.
pub fn project<T: Real>(
    f: &SampledFunction<T>,
    fam: &MraFamily<T>,
    j: i32,
    xs: DyadicGrid<T>,
) -> Result<SampledFunction<T>> {
    let window = (xs.left(), xs.right());
    check_window(f, window)?;
    Projection::new(f, fam, j, window)?.tabulate(xs)
}

/// One term of a wavelet expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    /// `b_k φ_{j0,k}`.
    Scaling { k: i64 },
    /// `a_{jk} ψ_{jk}`.
    Detail { j: i32, k: i64 },
}

impl Term {
    /// Level used when measuring how many levels are open at once; the
    /// scaling block sits just below the first detail level.
    pub fn level_key(self, j0: i32) -> i32 {
        match self {
            Term::Scaling { .. } => j0 - 1,
            Term::Detail { j, .. } => j,
        }
    }
}

/// An order of summation over expansion terms, with the bound `M` on how
/// many consecutive levels may be partially complete at any prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummationSchedule {
    pub j0: i32,
    pub terms: Vec<Term>,
    pub bounded_range: usize,
}

impl SummationSchedule {
    pub fn new(j0: i32, terms: Vec<Term>, bounded_range: usize) -> Self {
        Self {
            j0,
            terms,
            bounded_range,
        }
    }

    /// Scaling block first, then each detail level in full.
    pub fn level_order<T: Real>(coeffs: &ExpansionCoefficients<T>, bounded_range: usize) -> Self {
        Self::new(coeffs.j0, coeffs.terms(), bounded_range)
    }

    /// Levels are grouped in blocks of `width` consecutive levels; inside a
    /// block terms are taken round-robin across its levels.
    pub fn interleaved<T: Real>(
        coeffs: &ExpansionCoefficients<T>,
        width: usize,
        bounded_range: usize,
    ) -> Self {
        let width = width.max(1);
        let mut by_level: BTreeMap<i32, Vec<Term>> = BTreeMap::new();
        for t in coeffs.terms() {
            by_level.entry(t.level_key(coeffs.j0)).or_default().push(t);
        }
        let levels: Vec<Vec<Term>> = by_level.into_values().collect();
        let mut terms = Vec::with_capacity(coeffs.len());
        for block in levels.chunks(width) {
            let longest = block.iter().map(Vec::len).max().unwrap_or(0);
            for i in 0..longest {
                for level in block {
                    if let Some(&t) = level.get(i) {
                        terms.push(t);
                    }
                }
            }
        }
        Self::new(coeffs.j0, terms, bounded_range)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The first `n` terms.
    pub fn prefix(&self, n: usize) -> Self {
        Self::new(
            self.j0,
            self.terms[..n.min(self.terms.len())].to_vec(),
            self.bounded_range,
        )
    }

    /// Whether the schedule contains exactly the coefficient set, each once.
    pub fn is_complete_for<T: Real>(&self, coeffs: &ExpansionCoefficients<T>) -> bool {
        let mine: BTreeSet<Term> = self.terms.iter().copied().collect();
        mine.len() == self.terms.len() && mine == coeffs.terms().into_iter().collect()
    }
}

/// Outcome of [`validate_schedule`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub valid: bool,
    pub bounded_range: usize,
    /// Largest span of partially complete levels over all prefixes.
    pub max_range: usize,
    /// Length of the first prefix attaining `max_range`.
    pub worst_prefix: usize,
}

/// Scans every prefix: a level is partially complete from its first term up
/// to (excluding) its last term in the schedule. The span of a prefix is
/// `max - min + 1` over its partially complete levels.
pub fn validate_schedule(schedule: &SummationSchedule) -> ScheduleReport {
    let mut first: BTreeMap<i32, usize> = BTreeMap::new();
    let mut last: BTreeMap<i32, usize> = BTreeMap::new();
    for (i, t) in schedule.terms.iter().enumerate() {
        let key = t.level_key(schedule.j0);
        first.entry(key).or_insert(i);
        last.insert(key, i);
    }
    let mut open: BTreeSet<i32> = BTreeSet::new();
    let mut max_range = 0;
    let mut worst_prefix = 0;
    for (i, t) in schedule.terms.iter().enumerate() {
        let key = t.level_key(schedule.j0);
        if first[&key] == i && last[&key] != i {
            open.insert(key);
        }
        if last[&key] == i {
            open.remove(&key);
        }
        let span = match (open.first(), open.last()) {
            (Some(lo), Some(hi)) => (hi - lo + 1) as usize,
            _ => 0,
        };
        if span > max_range {
            max_range = span;
            worst_prefix = i + 1;
        }
    }
    ScheduleReport {
        valid: max_range <= schedule.bounded_range,
        bounded_range: schedule.bounded_range,
        max_range,
        worst_prefix,
    }
}

/// Accumulates the schedule's terms, in order, on `xs`.
pub fn partial_sum<T: Real>(
    coeffs: &ExpansionCoefficients<T>,
    fam: &MraFamily<T>,
    schedule: &SummationSchedule,
    xs: DyadicGrid<T>,
) -> Result<SampledFunction<T>> {
    if coeffs.family != fam.spec() {
        return Err(Error::InvalidArgument(format!(
            "coefficients belong to {} but the family is {}",
            coeffs.family,
            fam.spec()
        )));
    }
    let mut values = vec![T::zero(); xs.count()];
    let scale = T::pow2(xs.level());
    let last = xs.count() as i64 - 1;
    for &term in &schedule.terms {
        let c = coeffs
            .get(term)
            .ok_or_else(|| Error::MissingCoefficient(format!("{term:?}")))?;
        let (g, j, k) = match term {
            Term::Scaling { k } => (fam.phi(), coeffs.j0, k),
            Term::Detail { j, k } => (fam.psi(), j, k),
        };
        let d = Dilate::new(g, j, k);
        let (a, b) = crate::grid::Tabulated::support(&d);
        let i0 = ((a - xs.left()) * scale).floor().to_i64().unwrap().max(0);
        let i1 = ((b - xs.left()) * scale).ceil().to_i64().unwrap().min(last);
        for i in i0..=i1 {
            let i = i as usize;
            values[i] += c * d.eval(xs.point(i));
        }
    }
    SampledFunction::new(xs, values, DecayHint::None, fam.phi().interpolation())
}
