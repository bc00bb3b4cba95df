//! Life-cycle impact vectors: the recursive composition rule, the
//! replacement delta, demand aggregation and planetary-boundary checks.
//!
//! Indicator layout is fixed as `[time, climate, material_0, ..]`.

use std::fmt;
use std::ops::{Add, Sub};

use crate::economy::{Configuration, Demand, Economy, MaterialId, ProductId, Supplier};
use crate::error::Error;

/// Impact tuple: labour hours, kgCO2e, and gross raw-material quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct LcaVector {
    pub time: f64,
    pub climate: f64,
    pub materials: Vec<f64>,
}

impl LcaVector {
    pub fn zeros(material_count: usize) -> Self {
        Self {
            time: 0.0,
            climate: 0.0,
            materials: vec![0.0; material_count],
        }
    }

    pub fn new(time: f64, climate: f64, materials: Vec<f64>) -> Self {
        Self { time, climate, materials }
    }

    pub fn dim(&self) -> usize {
        self.materials.len()
    }

    fn check_dim(&self, other: &Self) -> Result<(), Error> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            })
        }
    }

    /// `self += a * x`. Panics on dimension mismatch.
    #[inline]
    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.dim(), x.dim(), "LcaVector dimension mismatch");
        self.time += a * x.time;
        self.climate += a * x.climate;
        for (s, v) in self.materials.iter_mut().zip(&x.materials) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.time *= a;
        self.climate *= a;
        for v in &mut self.materials {
            *v *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            time: a * self.time,
            climate: a * self.climate,
            materials: self.materials.iter().map(|v| a * v).collect(),
        }
    }

    /// Indicator values in layout order.
    pub fn indicators(&self) -> impl Iterator<Item = (Indicator, f64)> + '_ {
        [(Indicator::Time, self.time), (Indicator::Climate, self.climate)]
            .into_iter()
            .chain(
                self.materials
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (Indicator::Material(MaterialId(i)), v)),
            )
    }

    pub fn is_zero(&self) -> bool {
        self.time == 0.0 && self.climate == 0.0 && self.materials.iter().all(|&v| v == 0.0)
    }

    /// Largest absolute per-component difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "LcaVector dimension mismatch");
        self.materials
            .iter()
            .zip(&other.materials)
            .map(|(a, b)| (a - b).abs())
            .fold((self.time - other.time).abs().max((self.climate - other.climate).abs()), f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && self.max_abs_diff(other) <= tol
    }
}

impl Add for &LcaVector {
    type Output = LcaVector;

    fn add(self, rhs: &LcaVector) -> LcaVector {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &LcaVector {
    type Output = LcaVector;

    fn sub(self, rhs: &LcaVector) -> LcaVector {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

/// One scalar indicator of an [`LcaVector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Indicator {
    Time,
    Climate,
    Material(MaterialId),
}

impl Indicator {
    pub fn label(&self, economy: &Economy) -> String {
        match self {
            Indicator::Time => "time".into(),
            Indicator::Climate => "climate".into(),
            Indicator::Material(m) => economy.material_name(*m).to_string(),
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indicator::Time => f.write_str("time"),
            Indicator::Climate => f.write_str("climate"),
            Indicator::Material(m) => write!(f, "material[{}]", m.0),
        }
    }
}

pub fn lca_raw(economy: &Economy, material: MaterialId) -> Result<LcaVector, Error> {
    let m = economy.material(material)?;
    let mut v = LcaVector::new(m.base_time, m.base_climate, vec![0.0; economy.material_count()]);
    v.materials[material.0] = 1.0;
    Ok(v)
}

/// Impact of one unit of `product` given already-known impacts of its chosen
/// suppliers: `overhead + sum_i q_i * lca(chosen_i)`, summed in slot order.
pub(crate) fn compose<'a>(
    economy: &Economy,
    config: &Configuration,
    product: ProductId,
    mut supplier_lca: impl FnMut(ProductId) -> &'a LcaVector,
) -> LcaVector {
    let spec = &economy.products()[product.0];
    let mut out = LcaVector::zeros(economy.material_count());
    out.time = spec.direct_overhead.time;
    out.climate = spec.direct_overhead.climate;
    for (slot, supplier) in spec.inputs.iter().zip(config.slots(product)) {
        match *supplier {
            Supplier::Material(m) => {
                let raw = &economy.raw_materials()[m.0];
                out.time += slot.quantity * raw.base_time;
                out.climate += slot.quantity * raw.base_climate;
                out.materials[m.0] += slot.quantity;
            }
            Supplier::Product(q) => out.axpy(slot.quantity, supplier_lca(q)),
        }
    }
    out
}

/// Per-call memo for [`lca_product`]: slot `p` holds `lca(p)` once computed.
#[derive(Clone, Debug, Default)]
pub struct LcaMemo {
    values: Vec<Option<LcaVector>>,
    version: Option<u64>,
}

impl LcaMemo {
    pub fn new() -> Self {
        Self::default()
    }

    fn sync(&mut self, economy: &Economy, config: &Configuration) {
        if self.version != Some(config.version()) || self.values.len() != economy.product_count() {
            self.values = vec![None; economy.product_count()];
            self.version = Some(config.version());
        }
    }

    pub fn get(
        &mut self,
        economy: &Economy,
        config: &Configuration,
        product: ProductId,
    ) -> Result<LcaVector, Error> {
        economy.product(product)?;
        self.sync(economy, config);
        Ok(self.fill(economy, config, product).clone())
    }

    fn fill(&mut self, economy: &Economy, config: &Configuration, product: ProductId) -> &LcaVector {
        if self.values[product.0].is_none() {
            for q in config.slots(product).iter().filter_map(|s| s.product()) {
                self.fill(economy, config, q);
            }
            let values = &self.values;
            let v = compose(economy, config, product, |q| values[q.0].as_ref().unwrap());
            self.values[product.0] = Some(v);
        }
        self.values[product.0].as_ref().unwrap()
    }
}

/// Impact of every product as rows `[time, climate, materials..]` in one
/// contiguous buffer, indexed by product id.
#[derive(Clone, Debug, PartialEq)]
pub struct LcaTable {
    width: usize,
    data: Vec<f64>,
}

impl LcaTable {
    /// From-scratch fill in (level, id) order.
    pub fn build(economy: &Economy, config: &Configuration) -> Self {
        let mut vectors = vec![LcaVector::zeros(economy.material_count()); economy.product_count()];
        for p in economy.topological_order() {
            vectors[p.0] = compose(economy, config, p, |q| &vectors[q.0]);
        }
        let width = 2 + economy.material_count();
        let mut data = Vec::with_capacity(width * vectors.len());
        for v in &vectors {
            data.push(v.time);
            data.push(v.climate);
            data.extend_from_slice(&v.materials);
        }
        Self { width, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, p: ProductId) -> &[f64] {
        &self.data[p.0 * self.width..(p.0 + 1) * self.width]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, p: ProductId) -> &mut [f64] {
        &mut self.data[p.0 * self.width..(p.0 + 1) * self.width]
    }

    pub fn vector(&self, p: ProductId) -> LcaVector {
        let row = self.row(p);
        LcaVector::new(row[0], row[1], row[2..].to_vec())
    }

    pub(crate) fn set(&mut self, p: ProductId, v: &LcaVector) {
        let row = self.row_mut(p);
        row[0] = v.time;
        row[1] = v.climate;
        row[2..].copy_from_slice(&v.materials);
    }

    /// `out += a * lca(p)`.
    pub fn accumulate(&self, p: ProductId, a: f64, out: &mut LcaVector) {
        let row = self.row(p);
        assert_eq!(row.len(), 2 + out.dim(), "LcaVector dimension mismatch");
        out.time += a * row[0];
        out.climate += a * row[1];
        for (o, v) in out.materials.iter_mut().zip(&row[2..]) {
            *o += a * v;
        }
    }
}

/// Recursive impact of one unit of `product` under the chosen suppliers of
/// `config`, computed from scratch.
pub fn lca_product(economy: &Economy, config: &Configuration, product: ProductId) -> Result<LcaVector, Error> {
    LcaMemo::new().get(economy, config, product)
}

/// Unmemoized recursive expansion; identical arithmetic order to [`lca_product`].
pub fn lca_product_unmemoized(
    economy: &Economy,
    config: &Configuration,
    product: ProductId,
) -> Result<LcaVector, Error> {
    economy.product(product)?;
    fn go(economy: &Economy, config: &Configuration, p: ProductId) -> LcaVector {
        let children: Vec<(ProductId, LcaVector)> = config
            .slots(p)
            .iter()
            .filter_map(|s| s.product())
            .map(|q| (q, go(economy, config, q)))
            .collect();
        compose(economy, config, p, |q| {
            &children.iter().find(|(c, _)| *c == q).unwrap().1
        })
    }
    Ok(go(economy, config, product))
}

/// Impact after replacing supplier `x` by `y` in a slot of quantity `q`:
/// `parent - q * lca(x) + q * lca(y)`.
pub fn lca_apply_replacement(
    parent: &LcaVector,
    q: f64,
    lca_x: &LcaVector,
    lca_y: &LcaVector,
) -> Result<LcaVector, Error> {
    parent.check_dim(lca_x)?;
    parent.check_dim(lca_y)?;
    let mut out = parent.clone();
    out.axpy(-q, lca_x);
    out.axpy(q, lca_y);
    Ok(out)
}

/// `sum over demand of units * lca(product)`, from scratch.
pub fn total_impact(economy: &Economy, config: &Configuration, demand: &Demand) -> Result<LcaVector, Error> {
    let mut memo = LcaMemo::new();
    let mut total = LcaVector::zeros(economy.material_count());
    for (p, units) in demand.entries() {
        total.axpy(units, &memo.get(economy, config, p)?);
    }
    Ok(total)
}

/// Per-indicator caps; `None` is unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanetaryBounds {
    pub max_time: Option<f64>,
    pub max_climate: Option<f64>,
    pub max_materials: Vec<Option<f64>>,
}

impl PlanetaryBounds {
    pub fn unbounded(material_count: usize) -> Self {
        Self {
            max_time: None,
            max_climate: None,
            max_materials: vec![None; material_count],
        }
    }

    pub fn with_climate(mut self, cap: f64) -> Self {
        self.max_climate = Some(cap);
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        let caps = [self.max_time, self.max_climate].into_iter().chain(self.max_materials.iter().copied());
        for cap in caps.flatten() {
            if cap.is_nan() || cap < 0.0 {
                return Err(Error::InvalidParams(format!("bound {cap} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn cap(&self, indicator: Indicator) -> Option<f64> {
        match indicator {
            Indicator::Time => self.max_time,
            Indicator::Climate => self.max_climate,
            Indicator::Material(m) => self.max_materials[m.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub indicator: Indicator,
    pub value: f64,
    pub bound: f64,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn total_excess(&self) -> f64 {
        self.violations.iter().fold(0.0, |acc, v| acc + v.excess)
    }
}

pub fn check_bounds(impact: &LcaVector, bounds: &PlanetaryBounds) -> Result<FeasibilityReport, Error> {
    if bounds.max_materials.len() != impact.dim() {
        return Err(Error::DimensionMismatch {
            expected: impact.dim(),
            actual: bounds.max_materials.len(),
        });
    }
    let violations: Vec<Violation> = impact
        .indicators()
        .filter_map(|(indicator, value)| {
            let bound = bounds.cap(indicator)?;
            (value > bound).then_some(Violation {
                indicator,
                value,
                bound,
                excess: value - bound,
            })
        })
        .collect();
    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    })
}

/// Non-negative scalarization weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub time: f64,
    pub climate: f64,
    pub materials: Vec<f64>,
}

impl Weights {
    pub fn uniform(material_count: usize, w: f64) -> Self {
        Self {
            time: w,
            climate: w,
            materials: vec![w; material_count],
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let all = || [self.time, self.climate].into_iter().chain(self.materials.iter().copied());
        if all().any(|w| !(w.is_finite() && w >= 0.0)) {
            return Err(Error::InvalidParams("weights must be finite and >= 0".into()));
        }
        if !all().any(|w| w > 0.0) {
            return Err(Error::InvalidParams("at least one weight must be positive".into()));
        }
        Ok(())
    }
}

/// Weighted sum of indicators; lower is better.
pub fn scalarize(impact: &LcaVector, weights: &Weights) -> Result<f64, Error> {
    if weights.materials.len() != impact.dim() {
        return Err(Error::DimensionMismatch {
            expected: impact.dim(),
            actual: weights.materials.len(),
        });
    }
    Ok(weights.time * impact.time
        + weights.climate * impact.climate
        + weights
            .materials
            .iter()
            .zip(&impact.materials)
            .map(|(w, r)| w * r)
            .sum::<f64>())
}
