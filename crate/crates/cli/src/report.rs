//! Text renderings of library results. Numbers use 17 significant digits.

use std::fmt::Write as _;

use qsrgs_core::composition::CompositionReport;
use qsrgs_core::io::write_matrix;
use qsrgs_core::linalg::fmt_g17;

pub fn g(x: f64) -> String {
    fmt_g17(x)
}

fn opt(out: &mut String, name: &str, v: Option<f64>) {
    if let Some(v) = v {
        let _ = writeln!(out, "{name} = {}", g(v));
    }
}

fn indices(v: &[usize]) -> String {
    let s: Vec<String> = v.iter().map(|i| i.to_string()).collect();
    format!("[{}]", s.join(", "))
}

pub fn composition(r: &CompositionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "method = {}", r.method);
    let _ = writeln!(out, "classification = {}", r.classification);
    let _ = writeln!(out, "\n[composed]");
    write_matrix(&mut out, "Q", r.composed.q());
    write_matrix(&mut out, "S", r.composed.s());
    write_matrix(&mut out, "R", r.composed.r());
    let _ = writeln!(out, "\n[intermediates]");
    if r.epsilon_min.is_finite() {
        let _ = writeln!(out, "epsilon_min = {}", g(r.epsilon_min));
    }
    opt(&mut out, "epsilon", r.epsilon);
    opt(&mut out, "delta", r.delta);
    opt(&mut out, "delta_bar", r.delta_bar);
    opt(&mut out, "delta_hat", r.delta_hat);
    if let Some(s) = &r.s_bar {
        write_matrix(&mut out, "S_bar", s);
    }
    opt(&mut out, "nu_s_bar", r.nu_s_bar);
    opt(&mut out, "sigma_bar_psi", r.sigma_bar_psi);
    opt(&mut out, "delta_max", r.delta_max);
    opt(&mut out, "delta_min", r.delta_min);
    opt(&mut out, "sigma_bar_u_sum", r.sigma_bar_u_sum);
    opt(&mut out, "nu_bar_u_sum", r.nu_bar_u_sum);
    if !(r.r_positive.is_empty() && r.r_negative.is_empty() && r.r_zero.is_empty()) {
        let _ = writeln!(out, "r_positive = {}", indices(&r.r_positive));
        let _ = writeln!(out, "r_negative = {}", indices(&r.r_negative));
        let _ = writeln!(out, "r_zero = {}", indices(&r.r_zero));
    }
    if let Some(sign) = r.delta_sign {
        let _ = writeln!(out, "delta_sign = {sign}");
    }
    opt(&mut out, "gamma", r.gamma);
    opt(&mut out, "conic_center", r.conic_center);
    opt(&mut out, "conic_radius", r.conic_radius);
    for s in &r.subsystems {
        let _ = writeln!(out, "\n[subsystem {}]", s.index);
        let _ = writeln!(out, "epsilon = {}", g(s.epsilon));
        let _ = writeln!(out, "lambda_max_r = {}", g(s.lambda_max_r));
        let _ = writeln!(out, "delta = {}", g(s.delta));
        let _ = writeln!(out, "sigma_bar_u = {}", g(s.sigma_bar_u));
        let _ = writeln!(out, "sigma_bar_y = {}", g(s.sigma_bar_y));
        let _ = writeln!(out, "nu_bar_u = {}", g(s.nu_bar_u));
        let _ = writeln!(out, "nu_bar_y = {}", g(s.nu_bar_y));
        let _ = writeln!(out, "sigma_s = {}", g(s.sigma_s));
        let _ = writeln!(out, "commute_residual = {}", g(s.commute_residual));
    }
    if !r.notes.is_empty() {
        let _ = writeln!(out, "\n[notes]");
        for n in &r.notes {
            let _ = writeln!(out, "- {n}");
        }
    }
    out
}
