//! Ingestion of "ITEM:"-style text dumps from external simulators, plus a
//! matching text exporter used for round-trip checks.

use super::{Frame, FrameKind, Species, Trajectory, TrajectoryError, TrajectoryMeta};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Maps dump columns onto particle fields. Column names refer to the header
/// of the per-atom section, so no vendor naming is hard-wired.
#[derive(Debug, Clone)]
pub struct ColumnMap {
    pub id: String,
    pub species: String,
    /// Coordinate columns in axis order; length fixes the dimension.
    pub coords: Vec<String>,
    /// Coordinates are fractions of the box edge and must be unscaled.
    pub scaled: bool,
    /// Time per dump timestep, converting integer timesteps to tau.
    pub time_per_step: f64,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            id: "id".into(),
            species: "type".into(),
            coords: vec!["x".into(), "y".into(), "z".into()],
            scaled: false,
            time_per_step: 1.0,
        }
    }
}

fn bad(msg: String) -> TrajectoryError {
    TrajectoryError::TextDump(msg)
}

fn parse_f64(tok: &str, what: &str) -> Result<f64, TrajectoryError> {
    tok.parse::<f64>()
        .map_err(|_| bad(format!("bad {what}: {tok:?}")))
}

struct LineSource<R: BufRead> {
    lines: std::io::Lines<R>,
}

impl<R: BufRead> LineSource<R> {
    fn next_line(&mut self, what: &str) -> Result<String, TrajectoryError> {
        match self.lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(TrajectoryError::Io(e)),
            None => Err(bad(format!("unexpected end of file, wanted {what}"))),
        }
    }

    /// Next non-empty line, or None at end of file.
    fn next_content_line(&mut self) -> Result<Option<String>, TrajectoryError> {
        loop {
            match self.lines.next() {
                Some(Ok(l)) => {
                    if !l.trim().is_empty() {
                        return Ok(Some(l));
                    }
                }
                Some(Err(e)) => return Err(TrajectoryError::Io(e)),
                None => return Ok(None),
            }
        }
    }
}

/// Reads a whitespace-delimited block dump into a [`Trajectory`].
///
/// Species are inferred from the type column (`1 -> A`, `2 -> B`), ids are
/// re-sorted when out of order (with a warning), and positions are shifted by
/// the lower box bound and wrapped into the box.
pub fn ingest_text_dump(path: &Path, map: &ColumnMap) -> Result<Trajectory, TrajectoryError> {
    let dim = map.coords.len();
    if dim == 0 || dim > 3 {
        return Err(bad(
            "column map must name 1..=3 coordinate columns".to_string(),
        ));
    }
    let mut src = LineSource {
        lines: BufReader::new(std::fs::File::open(path)?).lines(),
    };
    let mut frames: Vec<Frame> = Vec::new();
    let mut expected_n: Option<usize> = None;
    while let Some(first) = src.next_content_line()? {
        if first.trim() != "ITEM: TIMESTEP" {
            return Err(bad(format!(
                "expected 'ITEM: TIMESTEP', found {:?}",
                first.trim()
            )));
        }
        let timestep = src
            .next_line("timestep")?
            .trim()
            .parse::<i64>()
            .map_err(|_| bad("bad timestep".into()))?;
        if !src
            .next_line("atom-count header")?
            .starts_with("ITEM: NUMBER OF ATOMS")
        {
            return Err(bad("expected 'ITEM: NUMBER OF ATOMS'".into()));
        }
        let natoms = src
            .next_line("atom count")?
            .trim()
            .parse::<usize>()
            .map_err(|_| bad("bad atom count".into()))?;
        if !src
            .next_line("box header")?
            .starts_with("ITEM: BOX BOUNDS")
        {
            return Err(bad("expected 'ITEM: BOX BOUNDS'".into()));
        }
        let mut box_edges = Vec::with_capacity(dim);
        let mut box_lo = Vec::with_capacity(dim);
        for _ in 0..dim {
            let line = src.next_line("box bounds")?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 2 {
                return Err(bad("short box bounds line".into()));
            }
            let lo = parse_f64(toks[0], "box lower bound")?;
            let hi = parse_f64(toks[1], "box upper bound")?;
            if hi <= lo {
                return Err(bad("inverted box bounds".into()));
            }
            box_lo.push(lo);
            box_edges.push(hi - lo);
        }
        let atoms_hdr = src.next_line("atoms header")?;
        if !atoms_hdr.starts_with("ITEM: ATOMS") {
            return Err(bad(format!("expected 'ITEM: ATOMS', found {atoms_hdr:?}")));
        }
        let columns: Vec<&str> = atoms_hdr
            .trim_start_matches("ITEM: ATOMS")
            .split_whitespace()
            .collect();
        let col_idx = |name: &str| -> Result<usize, TrajectoryError> {
            columns
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| bad(format!("missing column {name:?}")))
        };
        let id_col = col_idx(&map.id)?;
        let sp_col = col_idx(&map.species)?;
        let coord_cols = map
            .coords
            .iter()
            .map(|c| col_idx(c))
            .collect::<Result<Vec<_>, _>>()?;

        let fidx = frames.len();
        if let Some(exp) = expected_n {
            if exp != natoms {
                return Err(TrajectoryError::ParticleCountMismatch {
                    index: fidx,
                    expected: exp,
                    found: natoms,
                });
            }
        } else {
            expected_n = Some(natoms);
        }

        let mut rows: Vec<(u64, Species, Vec<f64>)> = Vec::with_capacity(natoms);
        for _ in 0..natoms {
            let line = src.next_line("atom line")?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != columns.len() {
                return Err(bad(format!(
                    "atom line has {} fields, header names {}",
                    toks.len(),
                    columns.len()
                )));
            }
            let id = toks[id_col]
                .parse::<u64>()
                .map_err(|_| bad(format!("bad id {:?}", toks[id_col])))?;
            let type_id = toks[sp_col]
                .parse::<u64>()
                .map_err(|_| bad(format!("bad type {:?}", toks[sp_col])))?;
            let species = match type_id {
                1 => Species::A,
                2 => Species::B,
                other => {
                    return Err(bad(format!(
                        "unsupported type id {other} (expected 1 or 2)"
                    )))
                }
            };
            let mut coords = Vec::with_capacity(dim);
            for (k, &c) in coord_cols.iter().enumerate() {
                let mut v = parse_f64(toks[c], "coordinate")?;
                if map.scaled {
                    v *= box_edges[k];
                } else {
                    v -= box_lo[k];
                }
                coords.push(v);
            }
            rows.push((id, species, coords));
        }
        let sorted = rows.windows(2).all(|w| w[0].0 < w[1].0);
        if !sorted {
            log::warn!("text dump frame {fidx}: ids out of order, re-sorting");
            rows.sort_by_key(|r| r.0);
        }
        let mut positions = Vec::with_capacity(natoms * dim);
        let mut species = Vec::with_capacity(natoms);
        for (_, sp, coords) in rows {
            species.push(sp);
            positions.extend(coords);
        }
        let mut frame = Frame {
            time: timestep as f64 * map.time_per_step,
            box_edges,
            positions,
            species,
            kind: FrameKind::Instantaneous,
        };
        frame.wrap_positions();
        frames.push(frame);
    }
    Trajectory::new(
        frames,
        TrajectoryMeta {
            n_particles: expected_n.unwrap_or(0),
            ..Default::default()
        },
    )
}

/// Writes a trajectory as an "ITEM:"-style text dump readable by
/// [`ingest_text_dump`] with the default column map.
pub fn write_text_dump(traj: &Trajectory, path: &Path) -> Result<(), TrajectoryError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let names = ["x", "y", "z"];
    for frame in &traj.frames {
        writeln!(out, "ITEM: TIMESTEP")?;
        writeln!(out, "{}", frame.time.round() as i64)?;
        writeln!(out, "ITEM: NUMBER OF ATOMS")?;
        writeln!(out, "{}", frame.n_particles())?;
        writeln!(out, "ITEM: BOX BOUNDS pp pp pp")?;
        for &e in &frame.box_edges {
            writeln!(out, "0.0 {e:.12e}")?;
        }
        write!(out, "ITEM: ATOMS id type")?;
        for name in names.iter().take(frame.dim()) {
            write!(out, " {name}")?;
        }
        writeln!(out)?;
        for i in 0..frame.n_particles() {
            write!(out, "{} {}", i + 1, frame.species[i] as u8 + 1)?;
            for &x in frame.position(i) {
                write!(out, " {x:.12e}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn hand_written_dump_parses() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.dump");
        std::fs::write(
            &path,
            "ITEM: TIMESTEP\n5\nITEM: NUMBER OF ATOMS\n2\n\
             ITEM: BOX BOUNDS pp pp pp\n0 4.0\n0 4.0\n0 4.0\n\
             ITEM: ATOMS id type x y z\n1 1 0.5 1.0 1.5\n2 2 2.0 2.5 3.0\n",
        )
        .unwrap();
        let t = ingest_text_dump(&path, &ColumnMap::default()).unwrap();
        assert_eq!(t.n_frames(), 1);
        let f = &t.frames[0];
        assert_eq!(f.time, 5.0);
        assert_eq!(f.species, vec![Species::A, Species::B]);
        assert_eq!(f.position(0), &[0.5, 1.0, 1.5]);
        assert_eq!(f.position(1), &[2.0, 2.5, 3.0]);
    }

    #[test]
    fn scaled_coordinates_are_unscaled() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.dump");
        std::fs::write(
            &path,
            "ITEM: TIMESTEP\n0\nITEM: NUMBER OF ATOMS\n1\n\
             ITEM: BOX BOUNDS pp pp pp\n0 8.0\n0 8.0\n0 8.0\n\
             ITEM: ATOMS id type xs ys zs\n1 1 0.25 0.5 0.75\n",
        )
        .unwrap();
        let map = ColumnMap {
            coords: vec!["xs".into(), "ys".into(), "zs".into()],
            scaled: true,
            ..Default::default()
        };
        let t = ingest_text_dump(&path, &map).unwrap();
        assert_eq!(t.frames[0].position(0), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn unsorted_ids_are_resorted() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.dump");
        std::fs::write(
            &path,
            "ITEM: TIMESTEP\n0\nITEM: NUMBER OF ATOMS\n2\n\
             ITEM: BOX BOUNDS pp pp pp\n0 4.0\n0 4.0\n0 4.0\n\
             ITEM: ATOMS id type x y z\n2 2 2.0 2.0 2.0\n1 1 1.0 1.0 1.0\n",
        )
        .unwrap();
        let t = ingest_text_dump(&path, &ColumnMap::default()).unwrap();
        assert_eq!(t.frames[0].species, vec![Species::A, Species::B]);
        assert_eq!(t.frames[0].position(0), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn missing_column_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.dump");
        std::fs::write(
            &path,
            "ITEM: TIMESTEP\n0\nITEM: NUMBER OF ATOMS\n1\n\
             ITEM: BOX BOUNDS pp pp pp\n0 4.0\n0 4.0\n0 4.0\n\
             ITEM: ATOMS id type x y\n1 1 1.0 1.0\n",
        )
        .unwrap();
        assert!(matches!(
            ingest_text_dump(&path, &ColumnMap::default()),
            Err(TrajectoryError::TextDump(_))
        ));
    }

    #[test]
    fn inconsistent_counts_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.dump");
        std::fs::write(
            &path,
            "ITEM: TIMESTEP\n0\nITEM: NUMBER OF ATOMS\n2\n\
             ITEM: BOX BOUNDS pp pp pp\n0 4.0\n0 4.0\n0 4.0\n\
             ITEM: ATOMS id type x y z\n1 1 1 1 1\n2 1 2 2 2\n\
             ITEM: TIMESTEP\n1\nITEM: NUMBER OF ATOMS\n1\n\
             ITEM: BOX BOUNDS pp pp pp\n0 4.0\n0 4.0\n0 4.0\n\
             ITEM: ATOMS id type x y z\n1 1 1 1 1\n",
        )
        .unwrap();
        assert!(matches!(
            ingest_text_dump(&path, &ColumnMap::default()),
            Err(TrajectoryError::ParticleCountMismatch { .. })
        ));
    }

    #[test]
    fn text_round_trip_to_declared_precision() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.dump");
        let traj = crate::trajectory::tests::sample_for_text_roundtrip();
        write_text_dump(&traj, &path).unwrap();
        let back = ingest_text_dump(&path, &ColumnMap::default()).unwrap();
        assert_eq!(back.n_frames(), traj.n_frames());
        for (fa, fb) in traj.frames.iter().zip(&back.frames) {
            assert_eq!(fa.species, fb.species);
            for (xa, xb) in fa.positions.iter().zip(&fb.positions) {
                assert!((xa - xb).abs() < 1e-9, "{xa} vs {xb}");
            }
        }
    }
}
