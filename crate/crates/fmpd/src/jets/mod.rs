//! Mixed partial derivatives of `L`, plus the finite-difference oracle that
//! cross-checks them.

mod dd;
mod hyperdual;
mod scalar;
mod space;
mod taylor;

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use dd::DoubleDouble;
pub use hyperdual::HyperDual;
pub use scalar::{dot, quadratic_form, Scalar};
pub use space::{
    DynLagrangian, DynVectorField, FinslerSpace, KillingField, Lagrangian, NamedField, Signature,
    VectorField,
};
pub use taylor::{Layout, Taylor};

use crate::error::{FinslerError, Result};

pub const MAX_ORDER_X: usize = 2;
pub const MAX_ORDER_Y: usize = 4;
pub const MAX_TOTAL_ORDER: usize = 5;

/// Expands `L` about `(x, y)` as a Taylor series in the `2n` variables
/// `(x¹…xⁿ, y¹…yⁿ)`, truncated at total degree `order`.
pub fn expand_l(space: &FinslerSpace, x: &[f64], y: &[f64], order: usize) -> Result<Taylor> {
    space.check_point(x, y)?;
    let n = space.dim();
    let layout = Layout::get(2 * n, order);
    let xs: Vec<Taylor> = (0..n).map(|i| Taylor::variable(&layout, i, x[i])).collect();
    let ys: Vec<Taylor> = (0..n).map(|i| Taylor::variable(&layout, n + i, y[i])).collect();
    let l = space.lagrangian().eval_taylor(&xs, &ys);
    if l.coefficients().iter().any(|c| !c.is_finite()) {
        return Err(FinslerError::EvaluationFailure {
            what: "L expansion".into(),
            x: x.to_vec(),
            y: y.to_vec(),
        });
    }
    Ok(l)
}

/// Table of mixed partials of `L` at one point.
///
/// Entries are stored once per multiset of derivative slots; [`Jet::get`]
/// accepts slots in any order.
#[derive(Clone, Debug)]
pub struct Jet {
    x: Vec<f64>,
    y: Vec<f64>,
    order_x: usize,
    order_y: usize,
    series: Taylor,
}

impl Jet {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.order_x, self.order_y)
    }

    pub fn is_valid(&self, ax: usize, by: usize) -> bool {
        ax <= self.order_x && by <= self.order_y && ax + by <= MAX_TOTAL_ORDER
    }

    /// `∂^{|a|+|b|} L / ∂x^{a…} ∂y^{b…}`; `None` outside the populated table.
    pub fn get(&self, x_slots: &[usize], y_slots: &[usize]) -> Option<f64> {
        if !self.is_valid(x_slots.len(), y_slots.len()) {
            return None;
        }
        let n = self.dim();
        let mut e = vec![0u8; 2 * n];
        for &i in x_slots {
            e[i] += 1;
        }
        for &j in y_slots {
            e[n + j] += 1;
        }
        Some(self.series.partial(&e))
    }

    /// Entry by exponent vector over `(x, y)`.
    pub fn get_exponents(&self, e: &[u8]) -> Option<f64> {
        let n = self.dim();
        let ax: usize = e[..n].iter().map(|&k| k as usize).sum();
        let by: usize = e[n..].iter().map(|&k| k as usize).sum();
        self.is_valid(ax, by).then(|| self.series.partial(e))
    }

    pub fn value(&self) -> f64 {
        self.series.value()
    }

    /// Exponent vectors of every populated entry, in canonical order.
    pub fn entries(&self) -> Vec<Vec<u8>> {
        table_entries(self.dim(), self.order_x, self.order_y)
    }
}

fn table_entries(n: usize, ox: usize, oy: usize) -> Vec<Vec<u8>> {
    let total = (ox + oy).min(MAX_TOTAL_ORDER);
    let layout = Layout::get(2 * n, total);
    (0..layout.len_upto(total))
        .map(|i| layout.exponents(i).to_vec())
        .filter(|e| {
            let ax: usize = e[..n].iter().map(|&k| k as usize).sum();
            let by: usize = e[n..].iter().map(|&k| k as usize).sum();
            ax <= ox && by <= oy
        })
        .collect()
}

pub fn jet_evaluate(
    space: &FinslerSpace,
    x: &[f64],
    y: &[f64],
    order_x: usize,
    order_y: usize,
) -> Result<Jet> {
    if order_x > MAX_ORDER_X || order_y > MAX_ORDER_Y {
        return Err(FinslerError::RejectedInput(format!(
            "jet orders ({order_x}, {order_y}) exceed ({MAX_ORDER_X}, {MAX_ORDER_Y})"
        )));
    }
    let l0 = space.l(x, y)?;
    if space.signature() == Signature::PositiveDefinite && l0 <= 0.0 {
        return Err(FinslerError::RejectedInput(format!(
            "L = {l0:e} ≤ 0 in a positive-definite space"
        )));
    }
    let order = (order_x + order_y).min(MAX_TOTAL_ORDER);
    let series = expand_l(space, x, y, order)?;
    Ok(Jet {
        x: x.to_vec(),
        y: y.to_vec(),
        order_x,
        order_y,
        series,
    })
}

/// Worst discrepancy within one `(|a|, |b|)` bucket.
#[derive(Clone, Debug)]
pub struct BucketDiscrepancy {
    pub order_x: usize,
    pub order_y: usize,
    pub worst: f64,
    pub entry: Vec<u8>,
    pub analytic: f64,
    pub oracle: f64,
}

#[derive(Clone, Debug)]
pub struct JetCheckReport {
    pub buckets: Vec<BucketDiscrepancy>,
}

impl JetCheckReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.buckets.iter().map(|b| b.worst).fold(0.0, f64::max)
    }

    pub fn check(&self, threshold: f64) -> Result<()> {
        match self
            .buckets
            .iter()
            .filter(|b| !(b.worst <= threshold))
            .max_by(|a, b| a.worst.total_cmp(&b.worst))
        {
            None => Ok(()),
            Some(b) => Err(FinslerError::Verification(format!(
                "jet entry {:?} in bucket ({}, {}): analytic {:.12e} vs stencil {:.12e} \
                 (discrepancy {:.3e} > {:.1e})",
                b.entry, b.order_x, b.order_y, b.analytic, b.oracle, b.worst, threshold
            ))),
        }
    }
}

/// One-dimensional central stencils for `d^j/dz^j`: offsets, integer weights
/// and their common divisor, scale `h^-j`. The weights are exact so that they
/// sum to zero in floating point.
fn stencil(order: u8) -> (&'static [i8], &'static [f64], f64) {
    match order {
        1 => (&[-2, -1, 1, 2], &[1.0, -8.0, 8.0, -1.0], 12.0),
        2 => (&[-2, -1, 0, 1, 2], &[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
        3 => (&[-2, -1, 1, 2], &[-1.0, 2.0, -2.0, 1.0], 2.0),
        4 => (&[-2, -1, 0, 1, 2], &[1.0, -4.0, 6.0, -4.0, 1.0], 1.0),
        _ => unreachable!("stencil order {order}"),
    }
}

struct StencilOracle<'a> {
    space: &'a FinslerSpace,
    base: Vec<f64>,
    steps: Vec<f64>,
    cache: HashMap<Vec<i8>, DoubleDouble>,
}

impl StencilOracle<'_> {
    fn eval(&mut self, offsets: &[i8]) -> DoubleDouble {
        if let Some(v) = self.cache.get(offsets) {
            return *v;
        }
        let n = self.space.dim();
        let z: Vec<DoubleDouble> = self
            .base
            .iter()
            .zip(&self.steps)
            .zip(offsets)
            .map(|((&b, &h), &k)| DoubleDouble::new(b) + DoubleDouble::new(h * k as f64))
            .collect();
        let v = self.space.lagrangian().eval_dd(&z[..n], &z[n..]);
        self.cache.insert(offsets.to_vec(), v);
        v
    }

    fn derivative(&mut self, e: &[u8]) -> f64 {
        let active: Vec<usize> = (0..e.len()).filter(|&v| e[v] > 0).collect();
        let mut offsets = vec![0i8; e.len()];
        let mut acc = DoubleDouble::ZERO;
        self.accumulate(e, &active, 0, &mut offsets, DoubleDouble::ONE, &mut acc);
        let mut scale = DoubleDouble::ONE;
        for &v in &active {
            scale = scale * stencil(e[v]).2;
            for _ in 0..e[v] {
                scale = scale * self.steps[v];
            }
        }
        (acc / scale).to_f64()
    }

    fn accumulate(
        &mut self,
        e: &[u8],
        active: &[usize],
        depth: usize,
        offsets: &mut Vec<i8>,
        weight: DoubleDouble,
        acc: &mut DoubleDouble,
    ) {
        if depth == active.len() {
            let v = self.eval(offsets);
            *acc = *acc + weight * v;
            return;
        }
        let var = active[depth];
        let (taps, weights, _) = stencil(e[var]);
        for (&k, &w) in taps.iter().zip(weights) {
            offsets[var] = k;
            self.accumulate(e, active, depth + 1, offsets, weight * w, acc);
        }
        offsets[var] = 0;
    }
}

/// Compares every populated `(2, 4)` jet entry against Richardson-extrapolated
/// central stencils evaluated in double-double precision.
///
/// The discrepancy of an entry is measured relative to the largest analytic
/// magnitude in its bucket. `seed` shuffles the slot order used to read each
/// analytic entry, so the symmetrizing accessor is exercised as well.
pub fn jet_check(space: &FinslerSpace, x: &[f64], y: &[f64], seed: u64) -> Result<JetCheckReport> {
    let jet = jet_evaluate(space, x, y, MAX_ORDER_X, MAX_ORDER_Y)?;
    let n = space.dim();
    let entries = jet.entries();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let base: Vec<f64> = x.iter().chain(y).copied().collect();
    let estimates: Vec<Vec<f64>> = [1e-3, 1e-4]
        .iter()
        .map(|&h| {
            let mut oracle = StencilOracle {
                space,
                base: base.clone(),
                steps: base.iter().map(|z| h * z.abs().max(1.0)).collect(),
                cache: HashMap::new(),
            };
            entries.iter().map(|e| oracle.derivative(e)).collect()
        })
        .collect();
    let ratio2 = (1e-3f64 / 1e-4).powi(2);

    let mut buckets: BTreeMap<(usize, usize), Vec<(Vec<u8>, f64, f64)>> = BTreeMap::new();
    for (k, e) in entries.iter().enumerate() {
        let mut xs: Vec<usize> = Vec::new();
        let mut ys: Vec<usize> = Vec::new();
        for v in 0..n {
            xs.extend(std::iter::repeat_n(v, e[v] as usize));
            ys.extend(std::iter::repeat_n(v, e[n + v] as usize));
        }
        xs.shuffle(&mut rng);
        ys.shuffle(&mut rng);
        let analytic = jet.get(&xs, &ys).expect("entry within table");
        let oracle = (ratio2 * estimates[1][k] - estimates[0][k]) / (ratio2 - 1.0);
        buckets
            .entry((xs.len(), ys.len()))
            .or_default()
            .push((e.clone(), analytic, oracle));
    }

    let buckets = buckets
        .into_iter()
        .map(|((ox, oy), rows)| {
            let scale = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let mut worst = BucketDiscrepancy {
                order_x: ox,
                order_y: oy,
                worst: 0.0,
                entry: rows[0].0.clone(),
                analytic: rows[0].1,
                oracle: rows[0].2,
            };
            for (e, a, o) in rows {
                let d = (a - o).abs() / scale;
                if !(d <= worst.worst) {
                    worst = BucketDiscrepancy {
                        order_x: ox,
                        order_y: oy,
                        worst: d,
                        entry: e,
                        analytic: a,
                        oracle: o,
                    };
                }
            }
            worst
        })
        .collect();
    Ok(JetCheckReport { buckets })
}

/// Worst violation of `J(x, λy) = λ^{2−|b|} J(x, y)` over every populated
/// entry and `λ ∈ {0.5, 2, 7}`, relative to the largest entry of its bucket.
pub fn homogeneity_ladder(space: &FinslerSpace, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = space.dim();
    let base = jet_evaluate(space, x, y, MAX_ORDER_X, MAX_ORDER_Y)?;
    let entries = base.entries();
    let mut worst = 0.0f64;
    for lambda in [0.5, 2.0, 7.0] {
        let ys: Vec<f64> = y.iter().map(|v| v * lambda).collect();
        let scaled = jet_evaluate(space, x, &ys, MAX_ORDER_X, MAX_ORDER_Y)?;
        let mut buckets: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
        for e in &entries {
            let ax: usize = e[..n].iter().map(|&k| k as usize).sum();
            let by: usize = e[n..].iter().map(|&k| k as usize).sum();
            let want = lambda.powi(2 - by as i32) * base.get_exponents(e).expect("populated entry");
            let got = scaled.get_exponents(e).expect("populated entry");
            let b = buckets.entry((ax, by)).or_default();
            b.0 = b.0.max((got - want).abs());
            b.1 = b.1.max(want.abs());
        }
        for (diff, scale) in buckets.into_values() {
            worst = worst.max(if scale > 0.0 { diff / scale } else { diff });
        }
    }
    Ok(worst)
}
