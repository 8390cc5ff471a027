//! Scratch pilot for calibrating fit windows (not part of the test suite).

use num_complex::Complex64 as C64;
use zenosim_core::engine::{run_ensemble, QrwSystem, Scheme, TbmSystem};
use zenosim_core::intervals::IntervalLaw;
use zenosim_core::qrw::{CoinAngle, SpinorInit};
use zenosim_core::scaling::{self, FitOptions, FitWindow, Regime};
use zenosim_core::tbm::TbmParams;

fn local_slopes(tag: &str, series: &[(f64, f64)]) {
    // windowed log-log slopes on a log grid
    let m_max = series.last().unwrap().0;
    let mut lo = 4.0f64;
    while lo * 2.0 < m_max {
        let hi = lo * 2.0;
        let window = FitWindow::new(lo as u64, hi as u64).unwrap();
        let opts = FitOptions { points_per_decade: 64, block_average: Some(4.0) };
        match scaling::fit_power_law(series, &window, Regime::Intermediate, &opts) {
            Ok(r) => println!(
                "{tag} [{:>8.0},{:>8.0}]: slope {:+.3} +- {:.3}",
                lo, hi, r.exponent, r.stderr
            ),
            Err(e) => println!("{tag} [{lo},{hi}]: {e}"),
        }
        lo = hi;
    }
}

fn series_of(values: &[f64]) -> Vec<(f64, f64)> {
    values.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(|s| s.as_str()).unwrap_or("qrw150");

    match what {
        "qrw150" => {
            // criterion 5/6 territory
            let init = SpinorInit::new(C64::new(1.0, 0.0), C64::new(0.0, 1.0), 0).unwrap();
            let sys = QrwSystem::new(150, CoinAngle::from_degrees(80.0).unwrap(), init).unwrap();
            let law = IntervalLaw::discrete_delta(2).unwrap();
            let res = run_ensemble(&sys, Scheme::Leftover, &law, 10_000, 1, 7, 1).unwrap();
            let s = series_of(&res.s_mean);
            let f = series_of(&res.f_mean());
            local_slopes("S", &s);
            local_slopes("F", &f);
            let window = FitWindow::new(4, 2000).unwrap();
            let opts = FitOptions { points_per_decade: 64, block_average: Some(4.0) };
            match scaling::detect_crossover_m1(&f, &window, &opts) {
                Ok(c) => println!(
                    "m1 = {:.1} (early {:+.3}, late {:+.3})",
                    c.m_star, c.early.exponent, c.late.exponent
                ),
                Err(e) => println!("m1: {e}"),
            }
        }
        "qrwm2" => {
            for n in [16usize, 24, 32] {
                let init =
                    SpinorInit::new(C64::new(1.0, 0.0), C64::new(0.0, 1.0), 0).unwrap();
                let sys =
                    QrwSystem::new(n, CoinAngle::from_degrees(80.0).unwrap(), init).unwrap();
                let law = IntervalLaw::discrete_delta(2).unwrap();
                let m_max = 40 * n * n * n;
                let res = run_ensemble(&sys, Scheme::Leftover, &law, m_max, 1, 7, 1).unwrap();
                let s = series_of(&res.s_mean);
                local_slopes(&format!("S{n}"), &s);
                println!("S({}) tail = {:.3e}", m_max, res.s_mean[m_max - 1]);
            }
        }
        "tbm150" => {
            for tau0 in [0.25f64, 1.0, 2.0] {
                println!("--- tau0 = {tau0}");
                let params = TbmParams::new(150, 1.0).unwrap();
                let sys = TbmSystem::new(params, 0).unwrap();
                let law = IntervalLaw::continuous_delta(tau0).unwrap();
                let res = run_ensemble(&sys, Scheme::Leftover, &law, 10_000, 1, 7, 1).unwrap();
                let s = series_of(&res.s_mean);
                let f = series_of(&res.f_mean());
                local_slopes(&format!("S(tau0={tau0})"), &s);
                local_slopes(&format!("F(tau0={tau0})"), &f);
            }
        }
        "tbmm2" => {
            for n in [16usize, 24, 32] {
                let params = TbmParams::new(n, 1.0).unwrap();
                let sys = TbmSystem::new(params, 0).unwrap();
                let law = IntervalLaw::continuous_delta(0.25).unwrap();
                let m_max = 60 * n * n * n;
                let res = run_ensemble(&sys, Scheme::Leftover, &law, m_max, 1, 7, 1).unwrap();
                let s = series_of(&res.s_mean);
                local_slopes(&format!("S{n}"), &s);
                println!("S({}) tail = {:.3e}", m_max, res.s_mean[m_max - 1]);
            }
        }
        "qrwm1" => {
            for n in [100usize, 150, 200] {
                for (law, tag, r) in [
                    (IntervalLaw::discrete_delta(2).unwrap(), "delta2", 1u64),
                    (IntervalLaw::poisson(1.5).unwrap(), "poisson1.5", 2000),
                ] {
                    let init =
                        SpinorInit::new(C64::new(1.0, 0.0), C64::new(0.0, 1.0), 0).unwrap();
                    let sys = QrwSystem::new(n, CoinAngle::from_degrees(80.0).unwrap(), init)
                        .unwrap();
                    let res =
                        run_ensemble(&sys, Scheme::Leftover, &law, 4000, r, 7, 1).unwrap();
                    let f = series_of(&res.f_mean());
                    let window = FitWindow::new(4, 3000).unwrap();
                    let opts = FitOptions {
                        points_per_decade: 64,
                        block_average: Some(2.0 * law.mean()),
                    };
                    match scaling::detect_crossover_m1(&f, &window, &opts) {
                        Ok(c) => println!(
                            "{tag} N={n}: m1 = {:>7.1}  N/<tau> = {:>6.1}  (early {:+.2}, late {:+.2})",
                            c.m_star,
                            n as f64 / law.mean(),
                            c.early.exponent,
                            c.late.exponent
                        ),
                        Err(e) => println!("{tag} N={n}: {e}"),
                    }
                }
            }
        }
        "osc" => {
            for lambda in [0.5f64, 1.5, 5.0] {
                let init =
                    SpinorInit::new(C64::new(1.0, 0.0), C64::new(0.0, 1.0), 0).unwrap();
                let sys =
                    QrwSystem::new(150, CoinAngle::from_degrees(80.0).unwrap(), init).unwrap();
                let law = IntervalLaw::poisson(lambda).unwrap();
                let res = run_ensemble(&sys, Scheme::Leftover, &law, 60, 1000, 7, 1).unwrap();
                let f = series_of(&res.f_mean());
                let window = FitWindow::new(2, 40).unwrap();
                let amp = scaling::oscillation_amplitude(&f, &window, 4).unwrap();
                println!("lambda {lambda}: oscillation amplitude {amp:.4}");
            }
        }
        other => eprintln!("unknown pilot '{other}'"),
    }
}
