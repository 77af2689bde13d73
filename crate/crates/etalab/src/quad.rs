//! Adaptive Gauss-Kronrod quadrature for vector-valued complex integrands.

use crate::linalg::C64;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-12, max_panels: 4000 }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vec<C64>,
    pub error: f64,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<C64>,
    error: f64,
}

fn kronrod<F: Fn(f64) -> Vec<C64>>(f: &F, a: f64, b: f64) -> Panel {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let centre = f(c);
    let dim = centre.len();
    let mut k: Vec<C64> = centre.iter().map(|z| z * WGK[10]).collect();
    let mut g = vec![C64::new(0.0, 0.0); dim];
    for j in 0..10 {
        let (fl, fr) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        for d in 0..dim {
            let s = fl[d] + fr[d];
            k[d] += s * WGK[j];
            if j % 2 == 1 {
                g[d] += s * WG[j / 2];
            }
        }
    }
    let error = k.iter().zip(&g).map(|(x, y)| ((x - y) * h).norm()).fold(0.0, f64::max);
    Panel { a, b, value: k.into_iter().map(|z| z * h).collect(), error }
}

/// Integrates `f` over `[a, b]`, bisecting the worst panel until the summed
/// error estimate meets the tolerance.
pub fn integrate<F: Fn(f64) -> Vec<C64>>(f: &F, a: f64, b: f64, tol: QuadTolerance) -> QuadResult {
    let mut panels = vec![kronrod(f, a, b)];
    loop {
        let dim = panels[0].value.len();
        let mut total = vec![C64::new(0.0, 0.0); dim];
        for p in &panels {
            for d in 0..dim {
                total[d] += p.value[d];
            }
        }
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let scale = total.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if error <= tol.abs.max(tol.rel * scale) || panels.len() >= tol.max_panels {
            return QuadResult { value: total, error, converged: panels.len() < tol.max_panels };
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        panels.push(kronrod(f, p.a, m));
        panels.push(kronrod(f, m, p.b));
    }
}

pub fn integrate_scalar<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: QuadTolerance) -> (C64, f64) {
    let r = integrate(&|x| vec![f(x)], a, b, tol);
    (r.value[0], r.error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_gaussian() {
        let (v, _) = integrate_scalar(&|x: f64| C64::new((-x * x).exp(), 0.0), -10.0, 10.0, QuadTolerance::default());
        assert!((v.re - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn resolves_narrow_lorentzian() {
        let eps = 1e-3;
        let (v, _) = integrate_scalar(&|x: f64| C64::new(eps / (x * x + eps * eps), 0.0), -1.0, 1.0, QuadTolerance::default());
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v.re - exact).abs() < 1e-11);
    }
}
