//! Samples as convex combinations of code words, with CSV and SVG export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::codebook::{Codebook, SampleHistogram};
use crate::ingest::io::csv_field;
use crate::{Error, Result};

/// Samples and code words projected onto two diffusion coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEmbedding {
    pub dims: (usize, usize),
    pub coords: Vec<[f64; 2]>,
    pub word_coords: Vec<[f64; 2]>,
    pub sample_ids: Vec<String>,
    pub labels: Vec<Option<String>>,
}

/// Each sample lands at `sum_i f_i c_i` restricted to `dims`; the code words
/// are the centroids restricted likewise.
pub fn embed_samples(
    hists: &[SampleHistogram],
    cb: &Codebook,
    dims: (usize, usize),
) -> Result<SampleEmbedding> {
    let d = cb.d();
    if dims.0 >= d || dims.1 >= d {
        return Err(Error::invalid(format!(
            "dims ({}, {}) out of range for a {d}-dimensional codebook",
            dims.0, dims.1
        )));
    }
    let word_coords: Vec<[f64; 2]> = (0..cb.k())
        .map(|b| {
            let c = cb.centroid(b);
            [c[dims.0], c[dims.1]]
        })
        .collect();
    let mut coords = Vec::with_capacity(hists.len());
    for h in hists {
        let f = h.histogram.values();
        if f.len() != cb.k() {
            return Err(Error::invalid(format!(
                "sample {} has {} bins, codebook has {}",
                h.sample_id,
                f.len(),
                cb.k()
            )));
        }
        let mut p = [0.0; 2];
        for (w, c) in f.iter().zip(&word_coords) {
            p[0] += w * c[0];
            p[1] += w * c[1];
        }
        coords.push(p);
    }
    Ok(SampleEmbedding {
        dims,
        coords,
        word_coords,
        sample_ids: hists.iter().map(|h| h.sample_id.clone()).collect(),
        labels: hists.iter().map(|h| h.label.clone()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Svg,
}

pub fn export_embedding(emb: &SampleEmbedding, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Csv => to_csv(emb).into_bytes(),
        ExportFormat::Svg => to_svg(emb).into_bytes(),
    }
}

/// `kind,id,label,x,y` with coordinates at 12 significant digits.
pub fn to_csv(emb: &SampleEmbedding) -> String {
    let mut out = String::from("kind,id,label,x,y\n");
    for (b, c) in emb.word_coords.iter().enumerate() {
        writeln!(out, "word,w{b},,{:.11e},{:.11e}", c[0], c[1]).unwrap();
    }
    for ((id, label), c) in emb.sample_ids.iter().zip(&emb.labels).zip(&emb.coords) {
        writeln!(
            out,
            "sample,{},{},{:.11e},{:.11e}",
            csv_field(id),
            csv_field(label.as_deref().unwrap_or("")),
            c[0],
            c[1]
        )
        .unwrap();
    }
    out
}

/// One parsed row of an embedding CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub kind: String,
    pub id: String,
    pub label: String,
    pub x: f64,
    pub y: f64,
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<EmbeddingRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse("embed.csv:1", e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["kind", "id", "label", "x", "y"] {
        return Err(Error::parse("embed.csv:1", "header must be kind,id,label,x,y"));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse("embed.csv", e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|_| Error::parse(format!("embed.csv:{line}"), "coordinate is not a number"))
        };
        rows.push(EmbeddingRow {
            kind: record[0].to_string(),
            id: record[1].to_string(),
            label: record[2].to_string(),
            x: num(3)?,
            y: num(4)?,
        });
    }
    Ok(rows)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 40.0;
const LEGEND_WIDTH: f64 = 160.0;
const WORD_COLOR: &str = "#f28e2b";
const PALETTE: [&str; 6] = ["#4e79a7", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#9c755f"];

#[derive(Clone, Copy)]
enum Shape {
    Circle,
    Triangle,
    Square,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

fn marker(out: &mut String, class: &str, shape: Shape, x: f64, y: f64, r: f64, fill: &str, title: Option<&str>) {
    let title = title.map(|t| format!("<title>{}</title>", escape(t))).unwrap_or_default();
    let close = if title.is_empty() { "/>".to_string() } else { format!(">{title}") };
    let end = |tag: &str| if title.is_empty() { String::new() } else { format!("</{tag}>") };
    match shape {
        Shape::Circle => writeln!(
            out,
            r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}"{close}{}"#,
            end("circle")
        ),
        Shape::Triangle => writeln!(
            out,
            r#"<polygon class="{class}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{fill}"{close}{}"#,
            x,
            y - r,
            x - r,
            y + r,
            x + r,
            y + r,
            end("polygon")
        ),
        Shape::Square => writeln!(
            out,
            r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"{close}{}"#,
            x - r,
            y - r,
            2.0 * r,
            2.0 * r,
            end("rect")
        ),
    }
    .unwrap();
}

/// Static scatter plot: code words as small orange dots, samples as larger
/// markers whose shape and color follow the label, and a legend.
pub fn to_svg(emb: &SampleEmbedding) -> String {
    let all = emb.word_coords.iter().chain(&emb.coords);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in all {
        for a in 0..2 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    if !lo[0].is_finite() {
        (lo, hi) = ([0.0; 2], [1.0; 2]);
    }
    let span = |a: usize| {
        let s = hi[a] - lo[a];
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    };
    let plot_w = WIDTH - LEGEND_WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let (sx, sy) = (span(0), span(1));
    let px = |c: &[f64; 2]| {
        (
            MARGIN + (c[0] - lo[0]) / sx * plot_w,
            HEIGHT - MARGIN - (c[1] - lo[1]) / sy * plot_h,
        )
    };

    let unlabeled = "unlabeled".to_string();
    let mut styles: BTreeMap<&String, (Shape, &str)> = BTreeMap::new();
    for l in &emb.labels {
        styles.entry(l.as_ref().unwrap_or(&unlabeled)).or_insert((Shape::Square, ""));
    }
    for (i, (_, style)) in styles.iter_mut().enumerate() {
        let shape = match i {
            0 => Shape::Circle,
            1 => Shape::Triangle,
            _ => Shape::Square,
        };
        *style = (shape, PALETTE[i % PALETTE.len()]);
    }

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999999"/>"##
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">diffusion coordinate {}</text>"#,
        MARGIN + plot_w / 2.0,
        HEIGHT - 10.0,
        emb.dims.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="14" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">diffusion coordinate {}</text>"#,
        MARGIN + plot_h / 2.0,
        MARGIN + plot_h / 2.0,
        emb.dims.1
    )
    .unwrap();

    out.push_str("<g id=\"words\">\n");
    for (b, c) in emb.word_coords.iter().enumerate() {
        let (x, y) = px(c);
        marker(&mut out, "word", Shape::Circle, x, y, 2.0, WORD_COLOR, Some(&format!("w{b}")));
    }
    out.push_str("</g>\n<g id=\"samples\">\n");
    for ((id, label), c) in emb.sample_ids.iter().zip(&emb.labels).zip(&emb.coords) {
        let (x, y) = px(c);
        let (shape, fill) = styles[label.as_ref().unwrap_or(&unlabeled)];
        marker(&mut out, "sample", shape, x, y, 5.0, fill, Some(id));
    }
    out.push_str("</g>\n<g id=\"legend\">\n");
    let lx = WIDTH - LEGEND_WIDTH + 10.0;
    let mut ly = MARGIN + 10.0;
    let entries = std::iter::once(("code word".to_string(), Shape::Circle, WORD_COLOR))
        .chain(styles.iter().map(|(l, (s, f))| ((*l).clone(), *s, *f)));
    for (text, shape, fill) in entries {
        marker(&mut out, "legend", shape, lx, ly, 5.0, fill, None);
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 12.0,
            ly + 4.0,
            escape(&text)
        )
        .unwrap();
        ly += 20.0;
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Histogram;

    fn codebook() -> Codebook {
        // 4 words in 3 dimensions
        let centroids = vec![0.0, 0.0, 1.0, 1.0, 0.0, 2.0, 0.0, 1.0, 3.0, -1.0, -1.0, 4.0];
        Codebook::from_parts(4, 3, centroids, vec![0, 1, 2, 3], 0.0).unwrap()
    }

    fn sample(id: &str, label: Option<&str>, h: &[f64]) -> SampleHistogram {
        SampleHistogram {
            sample_id: id.into(),
            label: label.map(str::to_string),
            histogram: Histogram::new(h.to_vec()).unwrap(),
        }
    }

    #[test]
    fn one_hot_and_uniform() {
        let cb = codebook();
        let hs = vec![
            sample("a", Some("air"), &[0.0, 0.0, 0.0, 1.0]),
            sample("b", Some("ground"), &[0.25; 4]),
        ];
        let emb = embed_samples(&hs, &cb, (0, 1)).unwrap();
        assert_eq!(emb.coords[0], emb.word_coords[3]);
        assert_eq!(emb.coords[1], [0.0, 0.0]);
        let emb = embed_samples(&hs, &cb, (2, 0)).unwrap();
        assert_eq!(emb.coords[0], [4.0, -1.0]);
        assert!(embed_samples(&hs, &cb, (0, 3)).is_err());
    }

    #[test]
    fn csv_rows_and_round_trip() {
        let cb = codebook();
        let hs = vec![sample("a,1", None, &[0.1, 0.2, 0.3, 0.4])];
        let emb = embed_samples(&hs, &cb, (0, 2)).unwrap();
        let csv = to_csv(&emb);
        let rows = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[4].id, "a,1");
        for (r, c) in rows[4..].iter().zip(&emb.coords) {
            assert!((r.x - c[0]).abs() <= 1e-9 * c[0].abs().max(1.0));
            assert!((r.y - c[1]).abs() <= 1e-9 * c[1].abs().max(1.0));
        }
    }

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let cb = codebook();
        let hs = vec![
            sample("a", Some("air"), &[0.5, 0.5, 0.0, 0.0]),
            sample("b<&>", Some("ground"), &[0.0, 0.0, 0.5, 0.5]),
            sample("c", None, &[0.25; 4]),
        ];
        let emb = embed_samples(&hs, &cb, (0, 1)).unwrap();
        let svg = to_svg(&emb);
        assert_eq!(svg, to_svg(&emb));
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let count = |class: &str| {
            doc.descendants()
                .filter(|n| n.attribute("class") == Some(class))
                .count()
        };
        assert_eq!(count("word"), 4);
        assert_eq!(count("sample"), 3);
        assert_eq!(count("legend"), 4);
    }
}
