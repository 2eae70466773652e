use crate::model::SpectralSpec;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3; // 2 sqrt(2 ln 2)

/// Central wavelength of the sources at a given temperature (linear tuning).
pub fn central_wavelength(temperature_k: f64, spec: &SpectralSpec) -> f64 {
    spec.center_wavelength_ref_nm + spec.tuning_slope_nm_per_k * (temperature_k - spec.temperature_ref_k)
}

/// Fraction of heralded signal photons that pass the signal filter.
///
/// Integrates over pump detuning `dp` and idler detuning `di` (GHz) with the
/// signal fixed by energy conservation, `ds = dp - di`. The weight is the
/// Gaussian pump spectrum times the idler filter times a Gaussian
/// phase-matching acceptance on `ds`; the result is the weighted mean of the
/// signal filter transmission. An infinite signal bandwidth gives exactly 1.
pub fn spectral_overlap_factor(spec: &SpectralSpec) -> f64 {
    let sigma_p = spec.pump_bandwidth_ghz / FWHM_PER_SIGMA;
    let sigma_i = spec.idler_filter_bandwidth_ghz / FWHM_PER_SIGMA;
    let sigma_f = spec.signal_filter_bandwidth_ghz / FWHM_PER_SIGMA;
    let lambda_m = spec.center_wavelength_ref_nm * 1e-9;
    let pm_fwhm_ghz = SPEED_OF_LIGHT * spec.phasematch_bandwidth_nm * 1e-9 / (lambda_m * lambda_m) * 1e-9;
    let sigma_m = pm_fwhm_ghz / FWHM_PER_SIGMA;

    let gauss = |x: f64, s: f64| if s.is_infinite() { 1.0 } else { (-0.5 * (x / s).powi(2)).exp() };

    const N: usize = 400; // Simpson intervals per axis, even
    let (lp, li) = (8.0 * sigma_p, 8.0 * sigma_i);
    let (hp, hi) = (2.0 * lp / N as f64, 2.0 * li / N as f64);
    let simpson = |k: usize| match k {
        0 | N => 1.0,
        k if k % 2 == 1 => 4.0,
        _ => 2.0,
    };

    let (mut num, mut den) = (0.0, 0.0);
    for a in 0..=N {
        let dp = -lp + a as f64 * hp;
        let wp = simpson(a) * gauss(dp, sigma_p);
        for b in 0..=N {
            let di = -li + b as f64 * hi;
            let ds = dp - di;
            let w = wp * simpson(b) * gauss(di, sigma_i) * gauss(ds, sigma_m);
            den += w;
            num += w * gauss(ds, sigma_f);
        }
    }
    if den == 0.0 {
        return 0.0;
    }
    (num / den).clamp(0.0, 1.0)
}
