//! Plain-text file formats: CSV matrices, view-mask files and `key=value`
//! manifests.
//!
//! A dataset directory holds a `manifest.txt` such as
//!
//! ```text
//! n=100
//! views=5
//! mask=mask.txt
//! kernel.0=kernel_0.csv
//! truth.0=truth_0.csv
//! features.0=features_0.csv
//! kind.0=gaussian:1
//! ```
//!
//! Relative paths resolve against the manifest's directory. Kernel CSVs are
//! full `n × n` matrices; entries outside the view's known block are written
//! as `0` and ignored on load.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::dataset::MultiViewDataset;
use crate::error::{MkcError, Result};
use crate::kernel::{KernelKind, KernelMatrix, ObservedKernel, ViewMask};
use crate::scalar::Scalar;

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Ordered `key=value` document. Blank lines and `#` comments are skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| MkcError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("expected key=value, got `{line}`"),
            })?;
            let key = key.trim().to_string();
            if entries.contains_key(&key) {
                return Err(MkcError::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            entries.insert(key, (lineno + 1, value.trim().to_string()));
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| MkcError::Parse {
            path: self.path.clone(),
            line: 0,
            msg: format!("missing required key `{key}`"),
        })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Parses the value of `key` with `FromStr`, reporting the line on failure.
    pub fn parse_value<V>(&self, key: &str) -> Result<Option<V>>
    where
        V: std::str::FromStr,
        V::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse::<V>().map(Some).map_err(|e| MkcError::Parse {
                path: self.path.clone(),
                line: *line,
                msg: format!("bad value for `{key}`: {e}"),
            }),
        }
    }

    /// Comma-separated list value.
    pub fn parse_list<V>(&self, key: &str) -> Result<Option<Vec<V>>>
    where
        V: std::str::FromStr,
        V::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<V>().map_err(|e| MkcError::Parse {
                        path: self.path.clone(),
                        line: *line,
                        msg: format!("bad list item `{s}` for `{key}`: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    /// Path value resolved against the document's directory.
    pub fn path_value(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|p| resolve(&self.path, p))
    }
}

fn resolve(doc: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        doc.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => MkcError::MissingFile(path.to_path_buf()),
        _ => MkcError::Io(e),
    })
}

/// Reads a headerless CSV of decimal values into a dense matrix.
pub fn read_matrix_csv<T: Scalar>(path: &Path) -> Result<DMatrix<T>> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| MkcError::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        msg: format!("`{}`: {e}", s.trim()),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(MkcError::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("row has {} values, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn format_matrix_csv<T: Scalar>(m: &DMatrix<T>) -> String {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 20);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", m[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv<T: Scalar>(path: &Path, m: &DMatrix<T>) -> Result<()> {
    fs::write(path, format_matrix_csv(m))?;
    Ok(())
}

/// Parses a mask file (`view=<v> known=<i1>,<i2>,...`, one line per view).
pub fn read_masks(path: &Path, n: usize, views: usize) -> Result<Vec<ViewMask>> {
    let text = read_to_string(path)?;
    let mut masks: Vec<Option<ViewMask>> = vec![None; views];
    let err = |line: usize, msg: String| MkcError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut view = None;
        let mut known = None;
        for field in line.split_whitespace() {
            match field.split_once('=') {
                Some(("view", v)) => {
                    view = Some(v.parse::<usize>().map_err(|e| err(lineno + 1, format!("view: {e}")))?)
                }
                Some(("known", list)) => {
                    known = Some(
                        list.split(',')
                            .filter(|s| !s.is_empty())
                            .map(|s| s.parse::<usize>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|e| err(lineno + 1, format!("known: {e}")))?,
                    )
                }
                _ => return Err(err(lineno + 1, format!("unexpected field `{field}`"))),
            }
        }
        let view = view.ok_or_else(|| err(lineno + 1, "missing `view=`".into()))?;
        let known = known.ok_or_else(|| err(lineno + 1, "missing `known=`".into()))?;
        if view >= views {
            return Err(err(lineno + 1, format!("view {view} out of range for {views} views")));
        }
        if masks[view].is_some() {
            return Err(err(lineno + 1, format!("view {view} listed twice")));
        }
        masks[view] = Some(ViewMask::new(n, known)?);
    }
    masks
        .into_iter()
        .enumerate()
        .map(|(v, m)| m.ok_or_else(|| err(0, format!("no mask line for view {v}"))))
        .collect()
}

pub fn format_masks<'a>(masks: impl IntoIterator<Item = &'a ViewMask>) -> String {
    let mut out = String::new();
    for (v, mask) in masks.into_iter().enumerate() {
        let known: Vec<String> = mask.known().iter().map(usize::to_string).collect();
        writeln!(out, "view={v} known={}", known.join(",")).unwrap();
    }
    out
}

/// Loads a dataset from its manifest.
pub fn load_dataset<T: Scalar>(manifest_path: &Path) -> Result<MultiViewDataset<T>> {
    let manifest = KeyValues::read(manifest_path)?;
    let n: usize = manifest
        .parse_value("n")?
        .ok_or_else(|| manifest_error(&manifest, "missing required key `n`"))?;
    let views: usize = manifest
        .parse_value("views")?
        .ok_or_else(|| manifest_error(&manifest, "missing required key `views`"))?;
    let mask_path = manifest
        .path_value("mask")
        .ok_or_else(|| manifest_error(&manifest, "missing required key `mask`"))?;
    let masks = read_masks(&mask_path, n, views)?;

    let mut kernels = Vec::with_capacity(views);
    for (v, mask) in masks.into_iter().enumerate() {
        let path = manifest
            .path_value(&format!("kernel.{v}"))
            .ok_or_else(|| manifest_error(&manifest, &format!("missing required key `kernel.{v}`")))?;
        let full = read_square(&path, n)?;
        let idx = mask.known().to_vec();
        let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| full[(idx[a], idx[b])]);
        kernels.push(ObservedKernel::from_known_block(&block, mask)?);
    }
    let mut ds = MultiViewDataset::new(kernels)?;

    let truth_keys: Vec<_> = (0..views).map(|v| manifest.path_value(&format!("truth.{v}"))).collect();
    if truth_keys.iter().any(Option::is_some) {
        let truth = truth_keys
            .into_iter()
            .enumerate()
            .map(|(v, p)| {
                let p = p.ok_or_else(|| manifest_error(&manifest, &format!("missing `truth.{v}`")))?;
                KernelMatrix::new(read_square(&p, n)?)
            })
            .collect::<Result<Vec<_>>>()?;
        ds = ds.with_truth(truth)?;
    }

    let kinds = (0..views)
        .map(|v| manifest.parse_value::<KernelKind>(&format!("kind.{v}")))
        .collect::<Result<Vec<_>>>()?;
    let feature_paths: Vec<_> = (0..views)
        .map(|v| manifest.path_value(&format!("features.{v}")))
        .collect();
    if feature_paths.iter().any(Option::is_some) {
        let features = feature_paths
            .into_iter()
            .enumerate()
            .map(|(v, p)| {
                let p = p.ok_or_else(|| manifest_error(&manifest, &format!("missing `features.{v}`")))?;
                read_matrix_csv::<T>(&p)
            })
            .collect::<Result<Vec<_>>>()?;
        let kinds = kinds
            .into_iter()
            .enumerate()
            .map(|(v, k)| k.ok_or_else(|| manifest_error(&manifest, &format!("features need `kind.{v}`"))))
            .collect::<Result<Vec<_>>>()?;
        ds = ds.with_features(features, kinds)?;
    } else if kinds.iter().all(Option::is_some) {
        ds = ds.with_kinds(kinds.into_iter().flatten().collect())?;
    }
    Ok(ds)
}

fn read_square<T: Scalar>(path: &Path, n: usize) -> Result<DMatrix<T>> {
    let m = read_matrix_csv::<T>(path)?;
    if m.nrows() != m.ncols() {
        return Err(MkcError::Shape(format!(
            "{}: matrix is {}x{}, expected square",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() != n {
        return Err(MkcError::Shape(format!(
            "{}: matrix is {}x{}, manifest says n={n}",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

fn manifest_error(m: &KeyValues, msg: &str) -> MkcError {
    MkcError::Parse {
        path: m.path().to_path_buf(),
        line: 0,
        msg: msg.to_string(),
    }
}

/// Writes `ds` under `dir` and returns the manifest path.
pub fn save_dataset<T: Scalar>(ds: &MultiViewDataset<T>, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    writeln!(manifest, "n={}", ds.n()).unwrap();
    writeln!(manifest, "views={}", ds.m()).unwrap();
    writeln!(manifest, "mask=mask.txt").unwrap();
    fs::write(dir.join("mask.txt"), format_masks(ds.masks()))?;
    for (v, k) in ds.kernels().iter().enumerate() {
        let name = format!("kernel_{v}.csv");
        write_matrix_csv(&dir.join(&name), k.zero_filled())?;
        writeln!(manifest, "kernel.{v}={name}").unwrap();
    }
    if let Some(truth) = ds.truth() {
        for (v, k) in truth.iter().enumerate() {
            let name = format!("truth_{v}.csv");
            write_matrix_csv(&dir.join(&name), k.values())?;
            writeln!(manifest, "truth.{v}={name}").unwrap();
        }
    }
    if let Some(features) = ds.features() {
        for (v, x) in features.iter().enumerate() {
            let name = format!("features_{v}.csv");
            write_matrix_csv(&dir.join(&name), x)?;
            writeln!(manifest, "features.{v}={name}").unwrap();
        }
    }
    if let Some(kinds) = ds.kinds() {
        for (v, kind) in kinds.iter().enumerate() {
            writeln!(manifest, "kind.{v}={kind}").unwrap();
        }
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest)?;
    Ok(path)
}

/// Accepts either a manifest file or a directory containing `manifest.txt`.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::compute_kernel;

    fn sample_dataset() -> MultiViewDataset<f64> {
        let x0 = DMatrix::from_fn(4, 2, |i, j| 0.1 + (i * 3 + j) as f64 / 7.0);
        let x1 = DMatrix::from_fn(4, 3, |i, j| ((i + 2 * j) as f64 * 0.37).cos());
        let k0 = compute_kernel(KernelKind::Linear, &x0).unwrap();
        let kind1 = KernelKind::gaussian(0.7).unwrap();
        let k1 = compute_kernel(kind1, &x1).unwrap();
        let masks = vec![
            ViewMask::new(4, vec![0, 1, 3]).unwrap(),
            ViewMask::new(4, vec![0, 2]).unwrap(),
        ];
        MultiViewDataset::from_truth(vec![k0, k1], masks)
            .unwrap()
            .with_features(vec![x0, x1], vec![KernelKind::Linear, kind1])
            .unwrap()
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let ds = sample_dataset();
        let manifest = save_dataset(&ds, dir.path()).unwrap();
        let back: MultiViewDataset<f64> = load_dataset(&manifest).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn missing_kernel_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_dataset(&sample_dataset(), dir.path()).unwrap();
        fs::remove_file(dir.path().join("kernel_1.csv")).unwrap();
        let err = load_dataset::<f64>(&manifest).unwrap_err();
        assert!(matches!(err, MkcError::MissingFile(_)), "{err}");
        assert!(err.to_string().contains("missing file"));
    }

    #[test]
    fn mask_index_out_of_range_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_dataset(&sample_dataset(), dir.path()).unwrap();
        fs::write(dir.path().join("mask.txt"), "view=0 known=0,1,4\nview=1 known=0,2\n").unwrap();
        let err = load_dataset::<f64>(&manifest).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn non_square_and_asymmetric_kernels_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_dataset(&sample_dataset(), dir.path()).unwrap();
        fs::write(dir.path().join("kernel_0.csv"), "1,0,0\n0,1,0\n0,0,1\n0,0,0\n").unwrap();
        assert!(matches!(load_dataset::<f64>(&manifest), Err(MkcError::Shape(_))));

        fs::write(
            dir.path().join("kernel_0.csv"),
            "1,0.5,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n",
        )
        .unwrap();
        assert!(matches!(
            load_dataset::<f64>(&manifest),
            Err(MkcError::Asymmetric { .. })
        ));
    }

    #[test]
    fn key_values_parse_and_reject_duplicates() {
        let kv = KeyValues::parse("# c\na = 1\nb=x,y\n\n", Path::new("p.cfg")).unwrap();
        assert_eq!(kv.get("a"), Some("1"));
        assert_eq!(kv.parse_list::<String>("b").unwrap().unwrap(), vec!["x", "y"]);
        assert!(KeyValues::parse("a=1\na=2\n", Path::new("p.cfg")).is_err());
        assert!(KeyValues::parse("oops\n", Path::new("p.cfg")).is_err());
    }

    #[test]
    fn csv_values_round_trip_exactly() {
        let m = DMatrix::from_fn(3, 2, |i, j| ((i * 2 + j) as f64).sqrt() / 3.0 - 1e-17);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_matrix_csv(&p, &m).unwrap();
        assert_eq!(read_matrix_csv::<f64>(&p).unwrap(), m);
    }
}
