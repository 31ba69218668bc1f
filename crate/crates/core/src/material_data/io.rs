//! CSV dump and reload of per-step material data sets.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::LocalDataSet;
use crate::error::{Error, Result};
use crate::phase_space::GlobalMetric;

pub const DATA_SET_HEADER: [&str; 5] = ["step", "element", "strain", "stress", "cost"];

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Streams data sets as `step,element,strain,stress,cost` rows.
pub struct DataSetCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> DataSetCsvWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        inner.write_record(DATA_SET_HEADER).map_err(csv_err)?;
        Ok(Self { inner })
    }

    pub fn write_step(&mut self, step: usize, sets: &[LocalDataSet]) -> Result<()> {
        for (e, set) in sets.iter().enumerate() {
            if set.dim() != 1 {
                return Err(Error::DimensionMismatch(
                    "CSV dumps hold uniaxial data only".into(),
                ));
            }
            for i in 0..set.len() {
                self.inner
                    .write_record([
                        step.to_string(),
                        e.to_string(),
                        set.strain(i)[0].to_string(),
                        set.stress(i)[0].to_string(),
                        set.cost(i).to_string(),
                    ])
                    .map_err(csv_err)?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(e.into_error()))
    }
}

/// Writes every step of `steps` into one CSV document.
pub fn write_data_sets_csv<W: Write>(out: W, steps: &[(usize, Vec<LocalDataSet>)]) -> Result<W> {
    let mut w = DataSetCsvWriter::new(out)?;
    for (step, sets) in steps {
        w.write_step(*step, sets)?;
    }
    w.finish()
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    i: usize,
    line: usize,
) -> Result<T> {
    let raw = record.get(i).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {} '{raw}'", DATA_SET_HEADER[i]),
    })
}

/// Reads a dump back into per-step lists of data sets, one per element of
/// `gm`. Every element must appear in every step that is present.
pub fn read_data_sets_csv<R: Read>(
    input: R,
    gm: &GlobalMetric,
) -> Result<Vec<(usize, Vec<LocalDataSet>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != DATA_SET_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", DATA_SET_HEADER.join(",")),
        });
    }
    type Columns = (Vec<f64>, Vec<f64>, Vec<f64>);
    let mut groups: BTreeMap<(usize, usize), Columns> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let step: usize = parse_field(&record, 0, line)?;
        let element: usize = parse_field(&record, 1, line)?;
        let strain: f64 = parse_field(&record, 2, line)?;
        let stress: f64 = parse_field(&record, 3, line)?;
        let cost: f64 = parse_field(&record, 4, line)?;
        if element >= gm.len() {
            return Err(Error::Parse {
                line,
                message: format!("element {element} out of range"),
            });
        }
        let g = groups.entry((step, element)).or_default();
        g.0.push(strain);
        g.1.push(stress);
        g.2.push(cost);
    }
    let mut out: Vec<(usize, Vec<LocalDataSet>)> = Vec::new();
    let mut current: Option<(usize, Vec<LocalDataSet>)> = None;
    for ((step, element), (strains, stresses, costs)) in groups {
        if current.as_ref().map_or(true, |c| c.0 != step) {
            if let Some(done) = current.take() {
                out.push(done);
            }
            current = Some((step, Vec::new()));
        }
        let (_, sets) = current.as_mut().expect("initialized above");
        if sets.len() != element {
            return Err(Error::EmptyDataSet {
                element: sets.len(),
            });
        }
        sets.push(LocalDataSet::from_scalars(
            strains,
            stresses,
            Some(costs),
            gm.local(element),
        )?);
    }
    out.extend(current);
    for (_, sets) in &out {
        if sets.len() != gm.len() {
            return Err(Error::EmptyDataSet {
                element: sets.len(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::LocalMetric;

    fn gm() -> GlobalMetric {
        GlobalMetric::uniform_scalar(10.0, vec![1.0, 2.0]).unwrap()
    }

    fn sets(shift: f64) -> Vec<LocalDataSet> {
        let m = LocalMetric::scalar(10.0).unwrap();
        vec![
            LocalDataSet::from_scalars(vec![0.1 + shift, 0.2], vec![1.0, 2.5], None, &m).unwrap(),
            LocalDataSet::from_scalars(vec![-0.3], vec![4.0], Some(vec![0.25]), &m).unwrap(),
        ]
    }

    #[test]
    fn dump_then_load_round_trips() {
        let steps = vec![(0, sets(0.0)), (3, sets(1e-17 + 0.1))];
        let bytes = write_data_sets_csv(Vec::new(), &steps).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("step,element,strain,stress,cost\n"));
        assert!(!text.contains('\r'));
        let back = read_data_sets_csv(bytes.as_slice(), &gm()).unwrap();
        assert_eq!(back.len(), 2);
        for ((s0, a), (s1, b)) in steps.iter().zip(&back) {
            assert_eq!(s0, s1);
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.len(), y.len());
                for i in 0..x.len() {
                    assert_eq!(x.point(i), y.point(i));
                }
            }
        }
    }

    #[test]
    fn missing_element_is_reported() {
        let text = "step,element,strain,stress,cost\n0,1,0.1,1,0\n";
        assert!(matches!(
            read_data_sets_csv(text.as_bytes(), &gm()),
            Err(Error::EmptyDataSet { element: 0 })
        ));
        let text = "step,element,strain,stress,cost\n0,0,abc,1,0\n";
        assert!(matches!(
            read_data_sets_csv(text.as_bytes(), &gm()),
            Err(Error::Parse { line: 2, .. })
        ));
        let text = "a,b\n";
        assert!(read_data_sets_csv(text.as_bytes(), &gm()).is_err());
    }
}
