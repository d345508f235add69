use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::study2::{cnd_effects, SweepOutput};
use super::{CndEffectPoint, StudyRecord, KINDS};
use crate::error::{Error, Result};
use crate::neurogram::NeurogramKind;

pub const RECORDS_CSV: &str = "study2_records.csv";
pub const CND_EFFECT_CSV: &str = "cnd_effect.csv";

const PALETTE: [&str; 10] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
    "#1f78b4", "#b15928",
];

fn sorted_records(out: &SweepOutput) -> Vec<&StudyRecord> {
    let pos = |v: &[String], x: &str| v.iter().position(|s| s == x).unwrap_or(usize::MAX);
    let profiles: Vec<String> = out.profiles.iter().map(|p| p.id.clone()).collect();
    let mut recs: Vec<&StudyRecord> = out.records.iter().collect();
    recs.sort_by(|a, b| {
        let key = |r: &StudyRecord| {
            (
                pos(&out.conditions, &r.condition),
                pos(&profiles, &r.profile_id),
                out.levels.iter().position(|&l| l == r.level_db).unwrap_or(usize::MAX),
                pos(&out.words, &r.word_id),
                r.fiber,
                r.kind,
            )
        };
        key(a).cmp(&key(b))
    });
    recs
}

/// Writes the record table, the fiber-loss effect table and one MR effect
/// chart per condition. Output depends only on `out`.
pub fn emit_report(out: &SweepOutput, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if out.records.is_empty() {
        return Err(Error::invalid("no records to report"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let write = |name: &str, text: String| -> Result<PathBuf> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p.display().to_string(), e))?;
        Ok(p)
    };
    let mut written = Vec::new();

    let mut csv = String::from("word_id,profile_id,level_db,condition,fiber,kind,nsim\n");
    for r in sorted_records(out) {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.word_id, r.profile_id, r.level_db, r.condition, r.fiber, r.kind, r.nsim
        )
        .expect("string write");
    }
    written.push(write(RECORDS_CSV, csv)?);

    let effects = cnd_effects(out)?;
    let mut csv = String::from("profile_id,level_db,condition,kind,cnd_effect\n");
    for e in &effects {
        writeln!(
            csv,
            "{},{},{},{},{}",
            e.profile_id, e.level_db, e.condition, e.kind, e.cnd_effect
        )
        .expect("string write");
    }
    written.push(write(CND_EFFECT_CSV, csv)?);

    let profiles: Vec<String> = out.profiles.iter().map(|p| p.id.clone()).collect();
    for cond in &out.conditions {
        let pts: Vec<&CndEffectPoint> = effects
            .iter()
            .filter(|e| &e.condition == cond && e.kind == NeurogramKind::Mr)
            .collect();
        written.push(write(
            &format!("cnd_effect_{cond}.svg"),
            render_svg(cond, &profiles, &out.levels, &pts),
        )?);
    }
    debug_assert_eq!(KINDS.len(), 2);
    Ok(written)
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Line chart of fiber-loss effect against level, one line per profile.
pub fn render_svg(title: &str, profiles: &[String], levels: &[f64], points: &[&CndEffectPoint]) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let xmin = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (xmin, xmax) = if xmax > xmin { (xmin, xmax) } else { (xmin - 1.0, xmin + 1.0) };
    let ys = points.iter().map(|p| p.cnd_effect).filter(|v| v.is_finite());
    let (mut ymin, mut ymax) = ys.fold((0.0f64, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    if ymax - ymin < 1e-6 {
        ymax = ymin + 0.01;
    }
    let step = nice_step(ymax - ymin);
    ymin = (ymin / step).floor() * step;
    ymax = (ymax / step).ceil() * step;

    let sx = |x: f64| left + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| top + (ymax - y) / (ymax - ymin) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{left:.1}" y="{top:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#000"/>"##
    );

    let n_ticks = ((ymax - ymin) / step).round() as i64;
    for i in 0..=n_ticks {
        let v = ymin + i as f64 * step;
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{left:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
            left + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + 4.0,
            fmt_tick(v, step)
        );
    }
    for &l in levels {
        let x = sx(l);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#000"/>"##,
            top + ph,
            top + ph + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{l}</text>"#,
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Level (dB SPL)</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">CND effect (MR)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    for (i, id) in profiles.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut line: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| &p.profile_id == id && p.cnd_effect.is_finite())
            .map(|p| (p.level_db, p.cnd_effect))
            .collect();
        line.sort_by(|a, b| a.0.total_cmp(&b.0));
        if !line.is_empty() {
            let coords: Vec<String> = line
                .iter()
                .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                coords.join(" ")
            );
            for &(x, y) in &line {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                    sx(x),
                    sy(y)
                );
            }
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(id)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (0..8)
        .find(|&d| {
            let x = step * 10f64.powi(d);
            (x - x.round()).abs() < 1e-9
        })
        .unwrap_or(8) as usize;
    let t = format!("{v:.decimals$}");
    if t.starts_with('-') && t[1..].chars().all(|c| c == '0' || c == '.') {
        t[1..].to_string()
    } else {
        t
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periphery::FiberType;
    use crate::studies::{HearingProfile, SweepStats};

    fn fake_output() -> SweepOutput {
        let profiles = HearingProfile::sweep_defaults();
        let conditions = vec!["clean".to_string(), "comp65".to_string(), "comp65_reverb".to_string()];
        let levels = vec![50.0, 95.0];
        let words = vec!["w1".to_string(), "w0".to_string()];
        let mut records = Vec::new();
        // inserted in scrambled order; the report must sort
        for w in words.iter().rev() {
            for l in levels.iter().rev() {
                for (pi, p) in profiles.iter().enumerate().rev() {
                    for c in &conditions {
                        for t in FiberType::ALL {
                            for k in KINDS {
                                records.push(StudyRecord {
                                    word_id: w.clone(),
                                    profile_id: p.id.clone(),
                                    level_db: *l,
                                    condition: c.clone(),
                                    fiber: t,
                                    kind: k,
                                    nsim: 0.9 - 0.01 * pi as f64 * (l / 50.0),
                                });
                            }
                        }
                    }
                }
            }
        }
        SweepOutput {
            records,
            profiles,
            conditions,
            levels,
            words,
            stats: SweepStats::default(),
        }
    }

    #[test]
    fn files_and_ordering() {
        let dir = tempfile::tempdir().unwrap();
        let out = fake_output();
        let files = emit_report(&out, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let recs = std::fs::read_to_string(dir.path().join(RECORDS_CSV)).unwrap();
        let lines: Vec<&str> = recs.lines().collect();
        assert_eq!(lines[0], "word_id,profile_id,level_db,condition,fiber,kind,nsim");
        assert!(lines[1].starts_with("w1,no_cnd,50,clean,LS,MR,"));
        assert!(lines[2].starts_with("w1,no_cnd,50,clean,LS,FT,"));
        assert!(lines.last().unwrap().starts_with("w0,lsms100_hs20,95,comp65_reverb,HS,FT,"));

        let eff = std::fs::read_to_string(dir.path().join(CND_EFFECT_CSV)).unwrap();
        let first: Vec<&str> = eff.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(first[..4], ["no_cnd", "50", "clean", "MR"]);
        assert_eq!(first[4].parse::<f64>().unwrap(), 0.0);

        let again = tempfile::tempdir().unwrap();
        emit_report(&out, again.path()).unwrap();
        for f in &files {
            let name = f.file_name().unwrap();
            assert_eq!(std::fs::read(f).unwrap(), std::fs::read(again.path().join(name)).unwrap());
        }
        let svg = std::fs::read_to_string(dir.path().join("cnd_effect_comp65.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 7);
    }

    #[test]
    fn empty_records_rejected() {
        let mut out = fake_output();
        out.records.clear();
        assert!(emit_report(&out, tempfile::tempdir().unwrap().path()).is_err());
    }

    #[test]
    fn tick_formatting() {
        assert_eq!(fmt_tick(-0.0, 0.05), "0.00");
        assert_eq!(fmt_tick(0.25, 0.05), "0.25");
        assert_eq!(nice_step(0.3), 0.1);
    }
}
