//! Concrete orthonormal MRA families: Haar, Daubechies, Battle–Lemarié and
//! Shannon, each tabulated as sampled `φ` and `ψ` with verified invariants.

pub mod battle_lemarie;
pub mod cascade;
pub mod filter;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{inner_product, DecayHint, Dilate, DyadicGrid, Interpolation, SampledFunction};
use crate::scalar::{sinc, Real};

pub use battle_lemarie::battle_lemarie;
pub use cascade::{cascade_scaling, derive_wavelet};
pub use filter::{daubechies, FilterPair};

/// Sampling level used when none is requested.
pub const DEFAULT_LEVEL: i32 = 12;
/// Half-width of the truncated Shannon support.
pub const SHANNON_RADIUS: i64 = 64;
/// Shannon's declared algebraic decay order.
pub const SHANNON_DECAY_ORDER: f64 = 1.05;
/// Vanishing-moment count reported for Shannon, whose wavelet annihilates
/// every polynomial moment.
pub const ALL_MOMENTS: u32 = u32::MAX;

const CASCADE_ITERATIONS: usize = 400;
const CASCADE_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Haar,
    Daubechies,
    BattleLemarie,
    Shannon,
}

impl FamilyName {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::Haar => "haar",
            FamilyName::Daubechies => "daubechies",
            FamilyName::BattleLemarie => "battle_lemarie",
            FamilyName::Shannon => "shannon",
        }
    }

    /// Whether the family's parameter is meaningful.
    pub fn takes_param(self) -> bool {
        matches!(self, FamilyName::Daubechies | FamilyName::BattleLemarie)
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(FamilyName::Haar),
            "daubechies" | "db" => Ok(FamilyName::Daubechies),
            "battle_lemarie" | "battle-lemarie" | "bl" => Ok(FamilyName::BattleLemarie),
            "shannon" => Ok(FamilyName::Shannon),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// A family identifier plus its integer parameter (vanishing moments for
/// Daubechies, spline order for Battle–Lemarié, ignored otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FamilySpec {
    pub name: FamilyName,
    pub param: u32,
}

impl FamilySpec {
    pub fn new(name: FamilyName, param: u32) -> Result<Self> {
        let range = match name {
            FamilyName::Daubechies => Some(("daubechies", 1..=10, "1..=10")),
            FamilyName::BattleLemarie => Some(("battle_lemarie", 1..=4, "1..=4")),
            _ => None,
        };
        if let Some((family, ok, label)) = range {
            if !ok.contains(&param) {
                return Err(Error::ParamOutOfRange {
                    family,
                    param: param as i64,
                    range: label,
                });
            }
        }
        let param = if name.takes_param() { param } else { 0 };
        Ok(Self { name, param })
    }

    pub fn haar() -> Self {
        Self {
            name: FamilyName::Haar,
            param: 0,
        }
    }

    pub fn daubechies(n: u32) -> Result<Self> {
        Self::new(FamilyName::Daubechies, n)
    }

    pub fn battle_lemarie(k: u32) -> Result<Self> {
        Self::new(FamilyName::BattleLemarie, k)
    }

    pub fn shannon() -> Self {
        Self {
            name: FamilyName::Shannon,
            param: 0,
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.name.takes_param() {
            write!(f, "{}:{}", self.name, self.param)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

/// Parses `name` or `name:param`, e.g. `haar`, `daubechies:2`.
impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => {
                let p: u32 = p.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!(
                        "family parameter `{p}` is not a non-negative integer"
                    ))
                })?;
                (n.trim(), Some(p))
            }
            None => (s.trim(), None),
        };
        let name: FamilyName = name.parse()?;
        match (name.takes_param(), param) {
            (true, None) => Err(Error::InvalidArgument(format!(
                "family `{name}` needs a parameter, e.g. `{name}:2`"
            ))),
            (_, p) => Self::new(name, p.unwrap_or(0)),
        }
    }
}

/// Measured values of the four MRA invariants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct InvariantReport<T: Real> {
    /// `∫ φ`.
    pub phi_integral: T,
    /// `∫ ψ`.
    pub psi_integral: T,
    /// `max |Σ_k φ(x - k) - 1|` over one period of grid points.
    pub partition_defect: T,
    /// `max_k |⟨φ, φ(· - k)⟩ - δ_k|`.
    pub orthonormality_defect: T,
    /// Allowance added to every tolerance for the truncated tail of an
    /// algebraically decaying family; zero otherwise.
    pub truncation_slack: T,
}

impl<T: Real> InvariantReport<T> {
    pub const INTEGRAL_TOL: f64 = 1e-8;
    pub const PARTITION_TOL: f64 = 1e-6;
    pub const ORTHONORMALITY_TOL: f64 = 1e-6;

    /// Names and descriptions of the invariants that fail.
    pub fn failures(&self) -> Vec<(&'static str, String)> {
        let s = self.truncation_slack;
        let mut out = Vec::new();
        let mut check = |name: &'static str, value: T, tol: f64| {
            let tol = T::tol(tol) + s;
            if !(value <= tol) {
                out.push((name, format!("{value:e} exceeds {tol:e}")));
            }
        };
        check(
            "phi_integral",
            (self.phi_integral - T::one()).abs(),
            Self::INTEGRAL_TOL,
        );
        check("psi_integral", self.psi_integral.abs(), Self::INTEGRAL_TOL);
        check(
            "partition_of_unity",
            self.partition_defect,
            Self::PARTITION_TOL,
        );
        check(
            "orthonormality",
            self.orthonormality_defect,
            Self::ORTHONORMALITY_TOL,
        );
        out
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }
}

/// A named orthonormal MRA family with tabulated scaling function and wavelet.
#[derive(Clone, Debug)]
pub struct MraFamily<T: Real> {
    spec: FamilySpec,
    level: i32,
    filter: Option<FilterPair<T>>,
    phi: SampledFunction<T>,
    psi: SampledFunction<T>,
    vanishing_moments: u32,
    decay_class: DecayHint<T>,
    invariants: InvariantReport<T>,
}

/// [`make_family_at`] at [`DEFAULT_LEVEL`].
pub fn make_family<T: Real>(spec: FamilySpec) -> Result<MraFamily<T>> {
    make_family_at(spec, DEFAULT_LEVEL)
}

/// Builds the family tabulated at `level` and verifies its invariants.
pub fn make_family_at<T: Real>(spec: FamilySpec, level: i32) -> Result<MraFamily<T>> {
    let spec = FamilySpec::new(spec.name, spec.param)?;
    if !(3..=16).contains(&level) {
        return Err(Error::InvalidArgument(format!(
            "sampling level {level} outside the supported range 3..=16"
        )));
    }
    let (filter, phi, psi, vanishing_moments, decay_class) = match spec.name {
        FamilyName::Haar => haar_parts(level)?,
        FamilyName::Daubechies if spec.param == 1 => haar_parts(level)?,
        FamilyName::Daubechies => {
            let filter = daubechies::<T>(spec.param as usize)?;
            let phi = cascade::cascade_to_tolerance(
                &filter,
                CASCADE_ITERATIONS,
                level,
                T::tol(CASCADE_TOLERANCE),
            )?;
            let psi = derive_wavelet(&filter, &phi)?;
            (Some(filter), phi, psi, spec.param, DecayHint::Compact)
        }
        // the order-1 spline is the box function
        FamilyName::BattleLemarie if spec.param == 1 => haar_parts(level)?,
        FamilyName::BattleLemarie => {
            let bl = battle_lemarie::<T>(spec.param as usize, level)?;
            let psi = derive_wavelet(&bl.filter, &bl.phi)?;
            let psi = trim_tails(&psi)?;
            let decay = bl.phi.decay();
            (Some(bl.filter), bl.phi, psi, spec.param, decay)
        }
        FamilyName::Shannon => {
            let (phi, psi) = shannon_parts(level)?;
            let decay = phi.decay();
            (None, phi, psi, ALL_MOMENTS, decay)
        }
    };
    let truncation_slack = match spec.name {
        FamilyName::Shannon => shannon_slack(),
        _ => T::zero(),
    };
    let invariants = measure_invariants(&phi, &psi, truncation_slack);
    if let Some((name, detail)) = invariants.failures().into_iter().next() {
        return Err(Error::InvariantFailure { name, detail });
    }
    Ok(MraFamily {
        spec,
        level,
        filter,
        phi,
        psi,
        vanishing_moments,
        decay_class,
        invariants,
    })
}

type Parts<T> = (
    Option<FilterPair<T>>,
    SampledFunction<T>,
    SampledFunction<T>,
    u32,
    DecayHint<T>,
);

/// Indicator of `[0, 1)` as a step function; one empty cell on the left keeps
/// both grid endpoints at zero.
pub(crate) fn haar_phi<T: Real>(level: i32) -> Result<SampledFunction<T>> {
    let h = T::pow2(-level);
    let grid = DyadicGrid::new(-h, T::one(), level)?;
    SampledFunction::from_antiderivative(grid, DecayHint::Compact, |x| {
        x.max(T::zero()).min(T::one())
    })
}

fn haar_parts<T: Real>(level: i32) -> Result<Parts<T>> {
    let t = T::FRAC_1_SQRT_2();
    let filter = FilterPair::conjugate_mirror(vec![t, t], 0)?;
    let phi = haar_phi(level)?;
    let h = T::pow2(-level);
    let grid = DyadicGrid::new(-h, T::one(), level)?;
    let half = T::lit(0.5);
    let psi = SampledFunction::from_antiderivative(grid, DecayHint::Compact, |x| {
        if x <= T::zero() {
            T::zero()
        } else if x <= half {
            x
        } else if x <= T::one() {
            T::one() - x
        } else {
            T::zero()
        }
    })?;
    Ok((Some(filter), phi, psi, 1, DecayHint::Compact))
}

/// Bound on what the cut tails can contribute to `∫ sinc(x) sinc(x - k)`,
/// using `|sinc x| ≤ 1/(π|x|)`: `2 (1 + ln R) / (π² R)`.
fn shannon_slack<T: Real>() -> T {
    let r = T::from_int(SHANNON_RADIUS);
    T::lit(2.0) * (T::one() + r.ln()) / (T::PI() * T::PI() * r)
}

fn shannon_parts<T: Real>(level: i32) -> Result<(SampledFunction<T>, SampledFunction<T>)> {
    let r = T::from_int(SHANNON_RADIUS);
    let grid = DyadicGrid::new(-r, r, level)?;
    let decay = DecayHint::Algebraic {
        order: T::lit(SHANNON_DECAY_ORDER),
    };
    let phi = SampledFunction::from_fn(grid, decay, sinc)?;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let psi = SampledFunction::from_fn(grid, decay, |x| {
        two * sinc(two * x - T::one()) - sinc(x - half)
    })?;
    Ok((phi, psi))
}

/// Drops leading and trailing samples below `1e-13` of the peak.
fn trim_tails<T: Real>(f: &SampledFunction<T>) -> Result<SampledFunction<T>> {
    let v = f.values();
    let cut = f.sup_norm() * T::tol(1e-13);
    let first = v
        .iter()
        .position(|x| x.abs() > cut)
        .unwrap_or(0)
        .saturating_sub(1);
    let last = (v.iter().rposition(|x| x.abs() > cut).unwrap_or(v.len() - 1) + 1).min(v.len() - 1);
    let g = f.grid();
    let grid = DyadicGrid::new(g.point(first), g.point(last), g.level())?;
    SampledFunction::new(grid, v[first..=last].to_vec(), f.decay(), f.interpolation())
}

fn measure_invariants<T: Real>(
    phi: &SampledFunction<T>,
    psi: &SampledFunction<T>,
    truncation_slack: T,
) -> InvariantReport<T> {
    let (a, b) = phi.support();
    let level = phi.grid().level();
    let per_unit = 1usize << level;
    let mut partition_defect = T::zero();
    for i in 0..per_unit {
        let x = T::from_usize(i).unwrap() * T::pow2(-level);
        let k_lo = (x - b).ceil().to_i64().unwrap();
        let k_hi = (x - a).floor().to_i64().unwrap();
        let s: T = (k_lo..=k_hi).map(|k| phi.eval(x - T::from_int(k))).sum();
        partition_defect = partition_defect.max((s - T::one()).abs());
    }
    let width = (b - a).ceil().to_i64().unwrap();
    let mut orthonormality_defect = T::zero();
    for k in 0..=width {
        let p = inner_product(phi, &Dilate::new(phi, 0, k));
        let target = if k == 0 { T::one() } else { T::zero() };
        orthonormality_defect = orthonormality_defect.max((p - target).abs());
    }
    InvariantReport {
        phi_integral: phi.integral(),
        psi_integral: psi.integral(),
        partition_defect,
        orthonormality_defect,
        truncation_slack,
    }
}

impl<T: Real> MraFamily<T> {
    pub fn spec(&self) -> FamilySpec {
        self.spec
    }

    pub fn name(&self) -> FamilyName {
        self.spec.name
    }

    pub fn param(&self) -> u32 {
        self.spec.param
    }

    /// Sampling level of `φ` and `ψ`.
    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn filter(&self) -> Option<&FilterPair<T>> {
        self.filter.as_ref()
    }

    pub fn phi(&self) -> &SampledFunction<T> {
        &self.phi
    }

    pub fn psi(&self) -> &SampledFunction<T> {
        &self.psi
    }

    /// Number of vanishing moments of `ψ`; [`ALL_MOMENTS`] for Shannon.
    pub fn vanishing_moments(&self) -> u32 {
        self.vanishing_moments
    }

    pub fn decay_class(&self) -> DecayHint<T> {
        self.decay_class
    }

    pub fn invariants(&self) -> &InvariantReport<T> {
        &self.invariants
    }

    pub fn is_compact(&self) -> bool {
        self.decay_class == DecayHint::Compact
    }

    /// `φ_{jk}(x)`.
    pub fn phi_jk(&self, j: i32, k: i64, x: T) -> T {
        evaluate_dilate(&self.phi, j, k, x)
    }

    /// `ψ_{jk}(x)`.
    pub fn psi_jk(&self, j: i32, k: i64, x: T) -> T {
        evaluate_dilate(&self.psi, j, k, x)
    }

    pub fn to_document(&self) -> FamilyDocument<T> {
        FamilyDocument {
            name: self.spec.name,
            params: if self.spec.name.takes_param() {
                vec![self.spec.param]
            } else {
                Vec::new()
            },
            grid: *self.phi.grid(),
            values: self.phi.values().to_vec(),
            interpolation: self.phi.interpolation(),
            filter: self.filter.as_ref().map(|f| FilterDocument {
                lowpass: f.lowpass().to_vec(),
                offset: f.offset(),
            }),
            psi: SampledDocument {
                grid: *self.psi.grid(),
                values: self.psi.values().to_vec(),
                interpolation: self.psi.interpolation(),
            },
            vanishing_moments: self.vanishing_moments,
            decay_class: self.decay_class,
        }
    }

    /// Rebuilds a family from its document and re-verifies the invariants.
    pub fn from_document(doc: FamilyDocument<T>) -> Result<Self> {
        let spec = FamilySpec::new(doc.name, doc.params.first().copied().unwrap_or(0))?;
        let decay = doc.decay_class;
        let checked = |g: DyadicGrid<T>| DyadicGrid::new(g.left(), g.right(), g.level());
        let phi = SampledFunction::new(checked(doc.grid)?, doc.values, decay, doc.interpolation)?;
        let psi = SampledFunction::new(
            checked(doc.psi.grid)?,
            doc.psi.values,
            decay,
            doc.psi.interpolation,
        )?;
        let filter = doc
            .filter
            .map(|f| FilterPair::conjugate_mirror(f.lowpass, f.offset))
            .transpose()?;
        let truncation_slack = match spec.name {
            FamilyName::Shannon => shannon_slack(),
            _ => T::zero(),
        };
        let invariants = measure_invariants(&phi, &psi, truncation_slack);
        if let Some((name, detail)) = invariants.failures().into_iter().next() {
            return Err(Error::InvariantFailure { name, detail });
        }
        Ok(Self {
            spec,
            level: phi.grid().level(),
            filter,
            phi,
            psi,
            vanishing_moments: doc.vanishing_moments,
            decay_class: decay,
            invariants,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }
}

/// `2^{j/2} f(2^j x - k)`; zero where `2^j x - k` leaves the tabulated support.
pub fn evaluate_dilate<T: Real>(f: &SampledFunction<T>, j: i32, k: i64, x: T) -> T {
    Dilate::new(f, j, k).eval(x)
}

/// Serialized form of a family. Floats use the shortest decimal that parses
/// back to the identical binary value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FamilyDocument<T: Real> {
    pub name: FamilyName,
    pub params: Vec<u32>,
    pub grid: DyadicGrid<T>,
    pub values: Vec<T>,
    pub interpolation: Interpolation,
    pub filter: Option<FilterDocument<T>>,
    pub psi: SampledDocument<T>,
    pub vanishing_moments: u32,
    pub decay_class: DecayHint<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FilterDocument<T: Real> {
    pub lowpass: Vec<T>,
    pub offset: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SampledDocument<T: Real> {
    pub grid: DyadicGrid<T>,
    pub values: Vec<T>,
    pub interpolation: Interpolation,
}
