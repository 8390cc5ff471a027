use num_complex::Complex64 as C64;
use zenosim_core::engine::{run_ensemble, QrwSystem, Scheme, TbmSystem};
use zenosim_core::intervals::IntervalLaw;
use zenosim_core::qrw::{CoinAngle, SpinorInit};
use zenosim_core::tbm::TbmParams;

fn print_curve(tag: &str, s: &[f64]) {
    let mut m = 1.0f64;
    print!("{tag}: ");
    while (m as usize) <= s.len() {
        print!("({}, {:.3e}) ", m as usize, s[m as usize - 1]);
        m *= 2.0;
    }
    println!();
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "qrw".into());
    for n in [16usize, 24, 32] {
        let m_max = 100 * n * n * n;
        let s = match which.as_str() {
            "qrw" => {
                let init = SpinorInit::new(C64::new(1.0, 0.0), C64::new(0.0, 1.0), 0).unwrap();
                let sys = QrwSystem::new(n, CoinAngle::from_degrees(80.0).unwrap(), init).unwrap();
                let law = IntervalLaw::discrete_delta(2).unwrap();
                run_ensemble(&sys, Scheme::Leftover, &law, m_max, 1, 7, 1).unwrap().s_mean
            }
            _ => {
                let params = TbmParams::new(n, 1.0).unwrap();
                let sys = TbmSystem::new(params, 0).unwrap();
                let law = IntervalLaw::continuous_delta(0.25).unwrap();
                run_ensemble(&sys, Scheme::Leftover, &law, m_max, 1, 7, 1).unwrap().s_mean
            }
        };
        print_curve(&format!("{which} N={n}"), &s);
    }
}
