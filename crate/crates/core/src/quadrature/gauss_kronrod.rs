//! 21-point Gauss-Kronrod rule with the embedded 10-point Gauss rule.

use super::value::QuadValue;

/// Kronrod abscissae on [0, 1]; odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

pub const NODES: usize = 21;

/// Abscissae of the rule on [a, b], in a fixed order: the center first, then
/// symmetric pairs (left, right) for each Kronrod node.
pub fn nodes(a: f64, b: f64) -> [f64; NODES] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [center; NODES];
    for j in 0..10 {
        out[1 + 2 * j] = center - half * XGK[j];
        out[2 + 2 * j] = center + half * XGK[j];
    }
    out
}

/// Result of applying the rule on one panel.
#[derive(Debug, Clone)]
pub struct Panel<T> {
    pub a: f64,
    pub b: f64,
    pub value: T,
    /// Per-component error estimates.
    pub errors: Vec<f64>,
    /// Per-component integral of |f|, which sets the rounding floor.
    pub abs_integrals: Vec<f64>,
}

/// Combine function values (ordered as [`nodes`]) into the Kronrod estimate
/// and a QUADPACK-style rescaled error per component.
pub fn apply<T: QuadValue>(a: f64, b: f64, fv: &[T]) -> Panel<T> {
    debug_assert_eq!(fv.len(), NODES);
    let half = 0.5 * (b - a);
    let f_center = fv[0];

    let mut kronrod = f_center * WGK[10];
    let mut gauss = T::zero();
    for j in 0..10 {
        let pair = fv[1 + 2 * j] + fv[2 + 2 * j];
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }

    let dims = f_center.dims();
    let mean = kronrod * 0.5;
    let diff = kronrod - gauss;
    let mut errors = Vec::with_capacity(dims);
    let mut abs_integrals = Vec::with_capacity(dims);
    for k in 0..dims {
        let mut res_abs = WGK[10] * f_center.magnitude(k);
        let mut res_asc = WGK[10] * (f_center - mean).magnitude(k);
        for j in 0..10 {
            let (l, r) = (fv[1 + 2 * j], fv[2 + 2 * j]);
            res_abs += WGK[j] * (l.magnitude(k) + r.magnitude(k));
            res_asc += WGK[j] * ((l - mean).magnitude(k) + (r - mean).magnitude(k));
        }
        let scale = half.abs();
        abs_integrals.push(res_abs * scale);
        errors.push(rescale_error(
            diff.magnitude(k) * scale,
            res_abs * scale,
            res_asc * scale,
        ));
    }

    Panel {
        a,
        b,
        value: kronrod * half,
        errors,
        abs_integrals,
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err;
    if res_asc != 0.0 && scaled != 0.0 {
        let s = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if s < 1.0 { res_asc * s } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // K21 is exact through degree 31.
        let xs = nodes(-1.0, 2.0);
        let fv: Vec<f64> = xs.iter().map(|x| x.powi(20) - 3.0 * x.powi(7)).collect();
        let p = apply(-1.0, 2.0, &fv);
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert!((p.value - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn weights_sum_to_two() {
        let s: f64 = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((s - 2.0).abs() < 1e-14);
        assert!((g - 2.0).abs() < 1e-14);
    }
}
