//! Adaptive 7/15-point Gauss-Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::numeric::CompensatedSum;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tolerances for [`integrate`]. An interval is accepted once its error
/// estimate is at most `max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Each input interval is first cut into `2^refine` equal pieces.
    pub refine: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 2000,
            refine: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    /// Integral of `|f|` as seen by the rule.
    pub l1: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl QuadResult {
    fn absorb(&mut self, other: &QuadResult) {
        self.value += other.value;
        self.error += other.error;
        self.l1 += other.l1;
        self.converged &= other.converged;
        self.evaluations += other.evaluations;
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    l1: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    let mut abs = kron.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kron += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kron * half;
    let l1 = abs * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kron - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if l1 > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * l1);
    }
    Segment {
        a,
        b,
        value,
        error,
        l1,
    }
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the tolerance is met or the interval budget runs out.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    integrate_ref(&f, a, b, opts)
}

fn integrate_ref<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult {
            converged: true,
            ..QuadResult::default()
        };
    }
    let pieces = 1usize << opts.refine;
    let mut heap = BinaryHeap::with_capacity(pieces * 2);
    let step = (b - a) / pieces as f64;
    for i in 0..pieces {
        let lo = a + step * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + step };
        heap.push(kronrod(f, lo, hi));
    }
    let mut evaluations = 15 * pieces;
    let mut value: f64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    let mut converged = error <= opts.abs_tol.max(opts.rel_tol * value.abs());
    while !converged && heap.len() < opts.max_intervals.max(pieces) {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = kronrod(f, worst.a, mid);
        let right = kronrod(f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        converged = error <= opts.abs_tol.max(opts.rel_tol * value.abs());
    }
    // Re-sum from scratch so that the running updates leave no drift.
    let mut v = CompensatedSum::new();
    let mut e = 0.0;
    let mut l1 = 0.0;
    for s in heap.iter() {
        v.add(s.value);
        e += s.error;
        l1 += s.l1;
    }
    let value = v.value();
    QuadResult {
        value,
        error: e,
        l1,
        converged: e <= opts.abs_tol.max(opts.rel_tol * value.abs()) || converged,
        evaluations,
    }
}

/// Integrates over consecutive panels `[points[i], points[i+1]]`, each to
/// the tolerance `max(abs_tol, rel_tol * L1(panel))`. Suited to oscillatory
/// integrands whose sign changes sit near the breakpoints.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: &QuadOptions) -> QuadResult {
    let mut total = QuadResult {
        converged: true,
        ..QuadResult::default()
    };
    let mut value = CompensatedSum::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let first = kronrod(&f, a, b);
        let panel_opts = QuadOptions {
            abs_tol: opts.abs_tol.max(opts.rel_tol * first.l1),
            ..*opts
        };
        let r = integrate_ref(&f, a, b, &panel_opts);
        value.add(r.value);
        total.absorb(&r);
        total.evaluations += 15;
    }
    total.value = value.value();
    total
}
