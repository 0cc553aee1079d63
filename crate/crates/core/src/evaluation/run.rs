use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::index::Ranking;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub query_id: String,
    pub paragraph_id: String,
    pub rank: usize,
    pub score: f64,
    pub run_name: String,
}

/// A TREC run: `<queryId> Q0 <paragraphId> <rank> <score> <runName>`.
///
/// Per query, ranks are exactly `1..=n`, scores never increase with rank and
/// no paragraph repeats. Rows are kept sorted by query id, then rank.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    rows: Vec<RunRow>,
}

impl RunFile {
    pub fn from_rankings(rankings: &[Ranking], run_name: &str) -> Self {
        let mut sorted: Vec<&Ranking> = rankings.iter().collect();
        sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        let rows = sorted
            .into_iter()
            .flat_map(|r| {
                r.entries().iter().enumerate().map(move |(i, e)| RunRow {
                    query_id: r.query_id.clone(),
                    paragraph_id: e.id.clone(),
                    rank: i + 1,
                    score: e.score,
                    run_name: run_name.to_string(),
                })
            })
            .collect();
        RunFile { rows }
    }

    pub fn rows(&self) -> &[RunRow] {
        &self.rows
    }

    /// Paragraph ids per query in rank order.
    pub fn ranked_ids(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for row in &self.rows {
            out.entry(row.query_id.clone()).or_default().push(row.paragraph_id.clone());
        }
        out
    }

    /// Rankings rebuilt from the scores (rank ties fall back to id order).
    pub fn rankings(&self) -> Result<Vec<Ranking>> {
        let mut grouped: BTreeMap<&str, Vec<(String, f64)>> = BTreeMap::new();
        for row in &self.rows {
            grouped
                .entry(row.query_id.as_str())
                .or_default()
                .push((row.paragraph_id.clone(), row.score));
        }
        grouped.into_iter().map(|(q, scored)| Ranking::new(q, scored)).collect()
    }

    pub fn query_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.rows.iter().map(|r| r.query_id.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows: Vec<(usize, RunRow)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(Error::parse(lineno, format!("expected 6 fields, got {}", f.len())));
            }
            let rank: usize = f[3]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad rank {:?}", f[3])))?;
            let score: f64 = f[4]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad score {:?}", f[4])))?;
            if !score.is_finite() {
                return Err(Error::parse(lineno, "non-finite score"));
            }
            rows.push((
                lineno,
                RunRow {
                    query_id: f[0].to_string(),
                    paragraph_id: f[2].to_string(),
                    rank,
                    score,
                    run_name: f[5].to_string(),
                },
            ));
        }
        rows.sort_by(|a, b| a.1.query_id.cmp(&b.1.query_id).then(a.1.rank.cmp(&b.1.rank)));

        let mut start = 0;
        while start < rows.len() {
            let qid = rows[start].1.query_id.clone();
            let end = start + rows[start..].iter().take_while(|r| r.1.query_id == qid).count();
            let mut seen = HashSet::new();
            for (offset, (lineno, row)) in rows[start..end].iter().enumerate() {
                if row.rank != offset + 1 {
                    return Err(Error::parse(
                        *lineno,
                        format!("query {qid:?}: ranks are not contiguous from 1 (rank {})", row.rank),
                    ));
                }
                if offset > 0 && row.score > rows[start + offset - 1].1.score {
                    return Err(Error::parse(
                        *lineno,
                        format!("query {qid:?}: score increases at rank {}", row.rank),
                    ));
                }
                if !seen.insert(row.paragraph_id.as_str()) {
                    return Err(Error::parse(
                        *lineno,
                        format!("query {qid:?}: duplicate paragraph {:?}", row.paragraph_id),
                    ));
                }
            }
            start = end;
        }
        Ok(RunFile { rows: rows.into_iter().map(|(_, r)| r).collect() })
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.rows {
            writeln!(
                out,
                "{} Q0 {} {} {} {}",
                r.query_id,
                r.paragraph_id,
                r.rank,
                format_score(r.score),
                r.run_name
            )?;
        }
        Ok(())
    }
}

/// Eleven significant digits in exponent form.
fn format_score(score: f64) -> String {
    format!("{:.10e}", score + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let r = Ranking::new("q1", vec![("a".into(), 0.5), ("b".into(), 0.25), ("c".into(), -1.5)]).unwrap();
        let run = RunFile::from_rankings(&[r], "bm25");
        let mut buf = Vec::new();
        run.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "q1 Q0 a 1 5.0000000000e-1 bm25");
        assert_eq!(RunFile::read(buf.as_slice()).unwrap(), run);
    }

    #[test]
    fn three_rows() {
        let text = "q 0 a 1 3 r\nq 0 b 2 2 r\nq 0 c 3 1 r\n";
        let run = RunFile::read(text.as_bytes()).unwrap();
        assert_eq!(run.rows().len(), 3);
        assert_eq!(run.rankings().unwrap()[0].ids(), vec!["a", "b", "c"]);
    }

    #[test]
    fn violations_report_lines() {
        let cases = [
            ("q Q0 a 1 3 r\nq Q0 a 2 2 r\n", 2),
            ("q Q0 a 1 3 r\nq Q0 b 3 2 r\n", 2),
            ("q Q0 a 1 1 r\nq Q0 b 2 2 r\n", 2),
            ("q Q0 a 1 1\n", 1),
            ("q Q0 a one 1 r\n", 1),
        ];
        for (text, line) in cases {
            match RunFile::read(text.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn equal_scores_with_explicit_ranks_are_fine() {
        let run = RunFile::read("q Q0 b 1 1 r\nq Q0 a 2 1 r\n".as_bytes()).unwrap();
        assert_eq!(run.ranked_ids()["q"], vec!["b", "a"]);
    }
}
