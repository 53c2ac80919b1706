//! Orderings asserted by `--check`. Each returns `(description, holds)`;
//! a check whose methods are missing from the run is skipped.

use ifeq::bench::MethodReport;
use ifeq::signal::ComponentKind;

type Check = (String, bool);

fn find<'a>(reports: &'a [MethodReport], name: &str) -> Option<&'a MethodReport> {
    reports.iter().find(|r| r.method == name && r.error.is_none())
}

/// Mean ridge error over the impulse components.
fn impulse_error(r: &MethodReport) -> Option<f64> {
    let errs: Vec<f64> = r
        .ridge
        .iter()
        .filter(|c| c.kind == ComponentKind::Impulse)
        .filter_map(|c| c.mean_error)
        .collect();
    (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Concentration and accuracy on a noiseless multicomponent signal.
pub fn concentration(reports: &[MethodReport]) -> Vec<Check> {
    let mut out = Vec::new();
    let chain = ["et-if-mag", "fsst2", "fsst", "stft"];
    let entropies: Option<Vec<f64>> = chain.iter().map(|n| find(reports, n).and_then(|r| r.renyi)).collect();
    if let Some(e) = entropies {
        let ok = e.windows(2).all(|w| w[0] < w[1]);
        out.push((
            format!(
                "entropy et-if-mag {:.3} < fsst2 {:.3} < fsst {:.3} < stft {:.3}",
                e[0], e[1], e[2], e[3]
            ),
            ok,
        ));
    }
    if let Some(et) = find(reports, "et-if-mag") {
        let worst = et
            .ridge
            .iter()
            .map(|c| c.mean_error.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        out.push((format!("et-if-mag ridge error {worst:.3} <= 1 on every component"), worst <= 1.0));
    }
    let tsst = find(reports, "tsst").and_then(impulse_error);
    let fsst2 = find(reports, "fsst2").and_then(impulse_error);
    if let Some(t) = tsst {
        out.push((format!("tsst impulse ridge error {t:.3} <= 1 frame"), t <= 1.0));
        if let Some(f) = fsst2 {
            out.push((format!("fsst2 impulse ridge error {f:.3} > tsst {t:.3}"), f > t));
        }
    }
    out
}

/// Noise study: extraction loses parts of the chirp, nothing fails.
pub fn noisy(reports: &[MethodReport]) -> Vec<Check> {
    let mut out = Vec::new();
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| r.error.is_some())
        .map(|r| r.method.as_str())
        .collect();
    out.push((format!("all methods complete (failed: {failed:?})"), failed.is_empty()));
    if let Some(et) = find(reports, "et-if-mag") {
        if let Some(c) = et.ridge.iter().find(|c| c.kind == ComponentKind::Lfm) {
            let cov = c.coverage();
            out.push((format!("et-if-mag chirp corridor coverage {cov:.3} < 1"), cov < 1.0));
        }
    }
    out
}

/// Timing orderings of the method comparison.
pub fn timing(reports: &[MethodReport]) -> Vec<Check> {
    let mut out = Vec::new();
    let t = |n: &str| find(reports, n).map(|r| r.wall_time);
    if let Some(stft) = t("stft") {
        let slower = reports.iter().filter(|r| r.method != "stft").all(|r| r.wall_time > stft);
        out.push((format!("stft ({:.1} ms) is the fastest", stft * 1e3), slower));
    }
    if let Some(f2) = t("fsst2") {
        for name in ["et-if-mag", "rm-if-fp"] {
            if let Some(x) = t(name) {
                out.push((
                    format!("{name} ({:.1} ms) < fsst2 ({:.1} ms)", x * 1e3, f2 * 1e3),
                    x < f2,
                ));
            }
        }
    }
    let slowest = reports.iter().map(|r| r.wall_time).fold(0.0, f64::max);
    out.push((format!("slowest method {:.1} ms < 10 s", slowest * 1e3), slowest < 10.0));
    out
}
