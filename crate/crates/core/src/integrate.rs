//! One-dimensional quadrature: globally adaptive Gauss–Kronrod (10/21),
//! semi-infinite mappings, Gauss–Legendre rules for tensor products, and a
//! bracketed golden-section minimizer.

use serde::{Deserialize, Serialize};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_999_528,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss 10-point weights for XGK[1], XGK[3], .., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Value of a quadrature together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, o: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + o.value,
            abs_error: self.abs_error + o.abs_error,
            intervals: self.intervals + o.intervals,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-12, rel: 1e-12, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel, ..Default::default() }
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

/// Globally adaptive bisection on `[a, b]`; the interval with the largest
/// error estimate is split until the total error meets `tol`.
///
/// Integrable algebraic endpoint singularities are handled by repeated
/// bisection toward the endpoint; the Kronrod nodes never touch `a` or `b`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, abs_error: 0.0, intervals: 0 };
    }
    let (v, e) = gk21(&f, a, b);
    let mut segs = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > tol.abs.max(tol.rel * total.abs()) && segs.len() < tol.max_intervals {
        let (imax, _) = segs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (lo, hi, _, _) = segs[imax];
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gk21(&f, lo, mid);
        let (v2, e2) = gk21(&f, mid, hi);
        segs[imax] = (lo, mid, v1, e1);
        segs.push((mid, hi, v2, e2));
        total = segs.iter().map(|s| s.2).sum();
        err = segs.iter().map(|s| s.3).sum();
    }
    QuadResult { value: total, abs_error: err, intervals: segs.len() }
}

/// Integral over `[a, b]` split at the given interior break points.
pub fn adaptive_with_breaks<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> QuadResult {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.windows(2)
        .map(|w| adaptive(&f, w[0], w[1], tol))
        .fold(QuadResult { value: 0.0, abs_error: 0.0, intervals: 0 }, |acc, r| acc + r)
}

/// ∫_a^∞ f: plain on `[a, a+1]`, then `x = a + 1 + expm1(v)`,
/// `v = t/(1 − t)`, which turns algebraic tails into exponential ones.
pub fn adaptive_upper<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> QuadResult {
    let b = a + 1.0;
    let head = adaptive(&f, a, b, tol);
    let tail = adaptive(
        |t: f64| {
            let om = 1.0 - t;
            let v = t / om;
            let x = b + v.exp_m1();
            if !x.is_finite() {
                return 0.0;
            }
            let fx = f(x);
            // far out, a non-finite value is an overflowing factor times an underflowed one
            if fx == 0.0 || (!fx.is_finite() && x > 1e30) { 0.0 } else { fx * v.exp() / (om * om) }
        },
        0.0,
        1.0,
        tol,
    );
    head + tail
}

/// ∫_{-∞}^b f.
pub fn adaptive_lower<F: Fn(f64) -> f64>(f: F, b: f64, tol: Tolerance) -> QuadResult {
    adaptive_upper(|x| f(-x), -b, tol)
}

/// ∫ over the real line, split at `center`.
pub fn adaptive_real_line<F: Fn(f64) -> f64>(f: F, center: f64, tol: Tolerance) -> QuadResult {
    adaptive_lower(&f, center, tol) + adaptive_upper(&f, center, tol)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]`: `panels` panels of `order` nodes.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// Tensor-product composite Gauss–Legendre integral of `f` over the box `lo..hi`.
pub fn tensor_box<F: Fn(&[f64]) -> f64>(f: F, lo: &[f64], hi: &[f64], panels: usize, order: usize) -> f64 {
    let d = lo.len();
    let rules: Vec<_> = (0..d).map(|i| composite_rule(lo[i], hi[i], panels, order)).collect();
    let n = panels * order;
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for i in 0..d {
            x[i] = rules[i].0[idx[i]];
            w *= rules[i].1[idx[i]];
        }
        total += w * f(&x);
        let mut k = 0;
        loop {
            if k == d {
                return total;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Minimum of `g` over `[a, b]`: uniform grid scan followed by golden-section
/// refinement of the best bracket. Returns `(argmin, min)`.
pub fn minimize_scalar<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, grid: usize, xtol: f64) -> (f64, f64) {
    let h = (b - a) / grid as f64;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for i in 0..=grid {
        let v = g(a + i as f64 * h);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let mut lo = a + (best.saturating_sub(1)) as f64 * h;
    let mut hi = (a + (best + 1) as f64 * h).min(b);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut gc, mut gd) = (g(c), g(d));
    while hi - lo > xtol {
        if gc <= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - inv_phi * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + inv_phi * (hi - lo);
            gd = g(d);
        }
    }
    let x = 0.5 * (lo + hi);
    let v = g(x);
    if v <= best_val { (x, v) } else { (a + best as f64 * h, best_val) }
}
