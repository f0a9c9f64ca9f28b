//! Symbolic field recipes: `name(key=value, ...)` terms joined by `+`.

use std::f64::consts::PI;
use std::fmt;

use lichnerowicz_core::conformal::Potential;
use lichnerowicz_core::geometry::{Geometry, ScalarField, Spectral, SymTensorField};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
struct Call {
    name: String,
    args: Vec<(String, f64)>,
}

impl Call {
    fn get(&self, key: &str, default: Option<f64>) -> Result<f64, HarnessError> {
        match self.args.iter().find(|(k, _)| k == key) {
            Some((_, v)) => Ok(*v),
            None => default.ok_or_else(|| HarnessError::Recipe(format!("{}: missing parameter `{key}`", self.name))),
        }
    }

    fn allow(&self, keys: &[&str]) -> Result<(), HarnessError> {
        for (k, _) in &self.args {
            if !keys.contains(&k.as_str()) {
                return Err(HarnessError::Recipe(format!("{}: unknown parameter `{k}`", self.name)));
            }
        }
        Ok(())
    }
}

fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_calls(text: &str) -> Result<Vec<Call>, HarnessError> {
    let bad = |m: &str| HarnessError::Recipe(format!("`{text}`: {m}"));
    let mut calls = Vec::new();
    for term in split_top(text, '+') {
        let term = term.trim();
        let open = term.find('(').ok_or_else(|| bad("expected name(...)"))?;
        if !term.ends_with(')') {
            return Err(bad("missing closing parenthesis"));
        }
        let name = term[..open].trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(bad("invalid recipe name"));
        }
        let inner = term[open + 1..term.len() - 1].trim();
        let mut args = Vec::new();
        if !inner.is_empty() {
            for kv in inner.split(',') {
                let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                let k = k.trim().to_string();
                let v: f64 = v.trim().parse().map_err(|_| bad(&format!("`{}` is not a decimal number", v.trim())))?;
                if !v.is_finite() {
                    return Err(bad("non-finite parameter"));
                }
                if args.iter().any(|(a, _): &(String, f64)| *a == k) {
                    return Err(bad(&format!("duplicate parameter `{k}`")));
                }
                args.push((k, v));
            }
        }
        calls.push(Call { name: name.to_string(), args });
    }
    Ok(calls)
}

fn fmt_calls(f: &mut fmt::Formatter<'_>, calls: &[Call]) -> fmt::Result {
    for (i, c) in calls.iter().enumerate() {
        if i > 0 {
            write!(f, " + ")?;
        }
        write!(f, "{}(", c.name)?;
        for (j, (k, v)) in c.args.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}={v:?}")?;
        }
        write!(f, ")")?;
    }
    Ok(())
}

fn wavenumber(c: &Call, key: &str) -> Result<f64, HarnessError> {
    let k = c.get(key, Some(0.0))?;
    if k.fract() != 0.0 {
        return Err(HarnessError::Recipe(format!("{}: wavenumber `{key}` must be an integer", c.name)));
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq)]
enum ScalarTerm {
    Constant(f64),
    /// `amp cos(2π/P k·x + phase)`
    Cos { k: [f64; 3], amp: f64, phase: f64 },
    /// `amp exp(1 - 1/(1 - (r/radius)²))` about `center`, periodised.
    Bump { amp: f64, radius: f64, center: [f64; 3] },
}

/// Scalar field recipe: `constant(c=..)`, `cos(k1=..,k2=..,k3=..,amp=..,phase=..)`,
/// `bump(amp=..,radius=..,c1=..,c2=..,c3=..)` or `zero()`, summed with `+`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarRecipe {
    calls: Vec<Call>,
    terms: Vec<ScalarTerm>,
}

impl ScalarRecipe {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let calls = parse_calls(text)?;
        let mut terms = Vec::new();
        for c in &calls {
            match c.name.as_str() {
                "zero" => c.allow(&[])?,
                "constant" => {
                    c.allow(&["c"])?;
                    terms.push(ScalarTerm::Constant(c.get("c", None)?));
                }
                "cos" => {
                    c.allow(&["k1", "k2", "k3", "amp", "phase"])?;
                    terms.push(ScalarTerm::Cos {
                        k: [wavenumber(c, "k1")?, wavenumber(c, "k2")?, wavenumber(c, "k3")?],
                        amp: c.get("amp", Some(1.0))?,
                        phase: c.get("phase", Some(0.0))?,
                    });
                }
                "bump" => {
                    c.allow(&["amp", "radius", "c1", "c2", "c3"])?;
                    let radius = c.get("radius", None)?;
                    if !(radius > 0.0) {
                        return Err(HarnessError::Recipe("bump: radius must be positive".into()));
                    }
                    terms.push(ScalarTerm::Bump {
                        amp: c.get("amp", Some(1.0))?,
                        radius,
                        center: [c.get("c1", Some(0.0))?, c.get("c2", Some(0.0))?, c.get("c3", Some(0.0))?],
                    });
                }
                other => return Err(HarnessError::Recipe(format!("unknown scalar recipe `{other}`"))),
            }
        }
        Ok(ScalarRecipe { calls, terms })
    }

    pub fn zero() -> Self {
        Self::parse("zero()").expect("valid recipe")
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64], period: f64) -> f64 {
        let base = 2.0 * PI / period;
        self.terms
            .iter()
            .map(|t| match t {
                ScalarTerm::Constant(c) => *c,
                ScalarTerm::Cos { k, amp, phase } => {
                    amp * (base * x.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() + phase).cos()
                }
                ScalarTerm::Bump { amp, radius, center } => {
                    let r2: f64 = x
                        .iter()
                        .zip(center)
                        .map(|(a, c)| {
                            let d = a - c;
                            let d = d - period * (d / period).round();
                            d * d
                        })
                        .sum();
                    let s = r2 / (radius * radius);
                    if s < 1.0 {
                        amp * (1.0 - 1.0 / (1.0 - s)).exp()
                    } else {
                        0.0
                    }
                }
            })
            .sum()
    }

    pub fn sample(&self, g: &Geometry) -> Result<ScalarField, HarnessError> {
        let period = torus_period(g)?;
        Ok(ScalarField::from_fn(*g, |x| self.eval(x, period)))
    }
}

impl fmt::Display for ScalarRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_calls(f, &self.calls)
    }
}

fn torus_period(g: &Geometry) -> Result<f64, HarnessError> {
    if !g.is_torus() {
        return Err(HarnessError::Config("recipes are sampled on tori".into()));
    }
    Ok(g.spacing() * g.resolution() as f64)
}

/// Symmetric 2-tensor recipe: `zero()` or `tt_shear(amp=..,k=..,phase=..)`, the
/// transverse traceless field `σ_12 = σ_21 = amp cos(2π/P k x_3 + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecipe {
    calls: Vec<Call>,
    shears: Vec<(f64, f64, f64)>,
}

impl TensorRecipe {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let calls = parse_calls(text)?;
        let mut shears = Vec::new();
        for c in &calls {
            match c.name.as_str() {
                "zero" => c.allow(&[])?,
                "tt_shear" => {
                    c.allow(&["amp", "k", "phase"])?;
                    shears.push((c.get("amp", Some(1.0))?, wavenumber(c, "k")?, c.get("phase", Some(0.0))?));
                }
                other => return Err(HarnessError::Recipe(format!("unknown tensor recipe `{other}`"))),
            }
        }
        Ok(TensorRecipe { calls, shears })
    }

    pub fn zero() -> Self {
        Self::parse("zero()").expect("valid recipe")
    }

    pub fn is_zero(&self) -> bool {
        self.shears.is_empty()
    }

    pub fn sample(&self, g: &Geometry) -> Result<SymTensorField, HarnessError> {
        let n = g.dim();
        if !self.is_zero() && n < 3 {
            return Err(HarnessError::Recipe("tt_shear needs dimension at least 3".into()));
        }
        let base = 2.0 * PI / torus_period(g)?;
        let shears = self.shears.clone();
        Ok(SymTensorField::from_fn(*g, move |x| {
            let mut m = vec![0.0; n * n];
            let s: f64 = shears.iter().map(|(a, k, p)| a * (base * k * x[2] + p).cos()).sum();
            if n >= 3 {
                m[1] = s;
                m[n] = s;
            }
            m
        }))
    }
}

impl fmt::Display for TensorRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_calls(f, &self.calls)
    }
}

/// Potential recipe: `constant(c=..)` or `poly(c0=..,c1=..,...,c5=..)`, summed.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialRecipe {
    calls: Vec<Call>,
    coeffs: Vec<f64>,
}

impl PotentialRecipe {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        const KEYS: [&str; 6] = ["c0", "c1", "c2", "c3", "c4", "c5"];
        let calls = parse_calls(text)?;
        let mut coeffs = vec![0.0; KEYS.len()];
        for c in &calls {
            match c.name.as_str() {
                "zero" => c.allow(&[])?,
                "constant" => {
                    c.allow(&["c"])?;
                    coeffs[0] += c.get("c", None)?;
                }
                "poly" => {
                    c.allow(&KEYS)?;
                    for (i, k) in KEYS.iter().enumerate() {
                        coeffs[i] += c.get(k, Some(0.0))?;
                    }
                }
                other => return Err(HarnessError::Recipe(format!("unknown potential recipe `{other}`"))),
            }
        }
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(PotentialRecipe { calls, coeffs })
    }

    pub fn zero() -> Self {
        Self::parse("zero()").expect("valid recipe")
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// `(V, V', V'')` at `s`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        Potential::polynomial(self.coeffs.clone()).eval(s)
    }

    /// `base + eps * self`, as a potential.
    pub fn combine(base: &PotentialRecipe, eps: f64, shape: &PotentialRecipe) -> Potential {
        let len = base.coeffs.len().max(shape.coeffs.len());
        let c: Vec<f64> = (0..len)
            .map(|i| base.coeffs.get(i).copied().unwrap_or(0.0) + eps * shape.coeffs.get(i).copied().unwrap_or(0.0))
            .collect();
        Potential::polynomial(c)
    }
}

impl fmt::Display for PotentialRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_calls(f, &self.calls)
    }
}

/// `max_{j ≤ k} max |∂^j v|` with spectral derivatives.
pub fn ck_norm(v: &ScalarField, k: usize) -> Result<f64, HarnessError> {
    let sp = Spectral::new(v.geometry())?;
    let mut level = vec![v.values().to_vec()];
    let sup = |l: &[Vec<f64>]| l.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    let mut norm = sup(&level);
    for _ in 0..k {
        level = level.iter().flat_map(|c| sp.gradient(c)).collect();
        norm = norm.max(sup(&level));
    }
    Ok(norm)
}

/// `max_{j ≤ 2} sup_{s ∈ [lo, hi]} |V^{(j)}(s)|`, sampled.
pub fn potential_c2_norm(p: &PotentialRecipe, lo: f64, hi: f64) -> f64 {
    let m = 64;
    (0..=m)
        .map(|i| lo + (hi - lo) * i as f64 / m as f64)
        .flat_map(|s| p.eval(s))
        .fold(0.0f64, |a, x| a.max(x.abs()))
}
