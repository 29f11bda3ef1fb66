//! On-disk instance format and the replayable constraint stream.
//!
//! Layout (little-endian, no padding):
//!
//! ```text
//! "SDPS" | u32 version=1 | u64 n | u64 m | u8 has_initial_dual
//! C   : n² f64, row-major
//! b   : m f64
//! y0  : m f64              (only if has_initial_dual == 1)
//! A_1 .. A_m : n² f64 each, row-major
//! ```
//!
//! Only the constraint block is streamed; header, `C`, `b` and `y0` are loaded
//! once at open time and reading them does not count as a pass.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Result, SdpError};
use crate::linalg::{self, SymMatrix};

pub const MAGIC: [u8; 4] = *b"SDPS";
pub const VERSION: u32 = 1;
/// Bytes before the `C` block: magic, version, n, m, flag.
pub const HEADER_LEN: u64 = 4 + 4 + 8 + 8 + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SdpHeader {
    pub n: usize,
    pub m: usize,
    pub has_initial_dual: bool,
}

impl SdpHeader {
    fn words(&self) -> Option<u64> {
        let n2 = (self.n as u64).checked_mul(self.n as u64)?;
        let m = self.m as u64;
        let dual = if self.has_initial_dual { m } else { 0 };
        n2.checked_add(m)?
            .checked_add(dual)?
            .checked_add(m.checked_mul(n2)?)
    }

    /// Byte offset of `A_1`.
    pub fn constraint_offset(&self) -> u64 {
        let n2 = (self.n * self.n) as u64;
        let dual = if self.has_initial_dual { self.m as u64 } else { 0 };
        HEADER_LEN + 8 * (n2 + self.m as u64 + dual)
    }

    /// Exact file length implied by the header.
    pub fn file_len(&self) -> Result<u64> {
        self.words()
            .and_then(|w| w.checked_mul(8))
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or_else(|| {
                SdpError::InvalidHeader(format!("n={} m={} overflows", self.n, self.m))
            })
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(SdpError::InvalidHeader(format!(
                "n={} m={}, both must be at least 1",
                self.n, self.m
            )));
        }
        self.file_len().map(|_| ())
    }
}

/// An instance held fully in memory; used for writing and by the generators.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceData {
    pub c: SymMatrix,
    pub b: DVector<f64>,
    pub y0: Option<DVector<f64>>,
    pub constraints: Vec<SymMatrix>,
}

impl InstanceData {
    pub fn header(&self) -> SdpHeader {
        SdpHeader {
            n: self.c.nrows(),
            m: self.b.len(),
            has_initial_dual: self.y0.is_some(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let header = self.header();
        header.validate()?;
        let n = header.n;
        linalg::check_symmetric(&self.c, || "C".to_string())?;
        if self.constraints.len() != header.m {
            return Err(SdpError::DimensionMismatch(format!(
                "{} constraint matrices for m={}",
                self.constraints.len(),
                header.m
            )));
        }
        if let Some(y0) = &self.y0 {
            if y0.len() != header.m {
                return Err(SdpError::DimensionMismatch(format!(
                    "y0 has length {}, expected {}",
                    y0.len(),
                    header.m
                )));
            }
        }
        for (i, a) in self.constraints.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(SdpError::DimensionMismatch(format!(
                    "A_{} is {}x{}, expected {n}x{n}",
                    i + 1,
                    a.nrows(),
                    a.ncols()
                )));
            }
            linalg::check_symmetric(a, || format!("A_{}", i + 1))?;
        }
        Ok(())
    }

    /// `S(y) = Σ y_i A_i − C`, computed in memory.
    pub fn slack_at(&self, y: &DVector<f64>) -> SymMatrix {
        let mut s = -self.c.clone();
        for (a, yi) in self.constraints.iter().zip(y.iter()) {
            s += a * *yi;
        }
        s
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        self.validate()?;
        let mut w = BufWriter::new(w);
        let header = self.header();
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(header.n as u64).to_le_bytes())?;
        w.write_all(&(header.m as u64).to_le_bytes())?;
        w.write_all(&[u8::from(header.has_initial_dual)])?;
        write_row_major(&mut w, &self.c)?;
        for v in self.b.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        if let Some(y0) = &self.y0 {
            for v in y0.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for a in &self.constraints {
            write_row_major(&mut w, a)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn write_row_major<W: Write>(w: &mut W, m: &DMatrix<f64>) -> io::Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

/// Writes `data` to `path` in the binary instance layout.
pub fn write_instance(data: &InstanceData, path: impl AsRef<Path>) -> Result<()> {
    data.validate()?;
    let file = File::create(path)?;
    data.write_to(file)
}

/// Instance metadata loaded at open time. Constraints are only reachable through a stream.
#[derive(Debug, Clone)]
pub struct SdpInstance {
    pub header: SdpHeader,
    pub c: SymMatrix,
    pub b: DVector<f64>,
    pub y0: Option<DVector<f64>>,
}

impl SdpInstance {
    pub fn n(&self) -> usize {
        self.header.n
    }

    pub fn m(&self) -> usize {
        self.header.m
    }
}

/// Sequential, rewindable reader over `A_1..A_m`.
///
/// `pass_count` increments once per [`rewind`](Self::rewind); every operation
/// that consumes a pass starts with a rewind, so the count equals the number
/// of constraint scans begun. Reading without rewinding never increments it.
#[derive(Debug)]
pub struct ConstraintStream<R> {
    reader: R,
    header: SdpHeader,
    block_start: u64,
    cursor: usize,
    pass_count: u64,
    bytes_read: u64,
    raw: Vec<u8>,
    buf: SymMatrix,
}

/// Opens an instance file: loads header, `C`, `b`, `y0` and positions the stream at `A_1`.
pub fn open_stream(
    path: impl AsRef<Path>,
) -> Result<(SdpInstance, ConstraintStream<BufReader<File>>)> {
    let file = File::open(path)?;
    ConstraintStream::open(BufReader::new(file))
}

impl<R: Read + Seek> ConstraintStream<R> {
    pub fn open(mut reader: R) -> Result<(SdpInstance, Self)> {
        let actual = reader.seek(SeekFrom::End(0))?;
        reader.seek(SeekFrom::Start(0))?;

        if actual < HEADER_LEN {
            return Err(SdpError::Truncated {
                section: "header",
                expected: HEADER_LEN,
                actual,
            });
        }
        let mut fixed = [0u8; HEADER_LEN as usize];
        reader.read_exact(&mut fixed)?;
        let magic: [u8; 4] = fixed[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(SdpError::BadMagic { found: magic });
        }
        let version = u32::from_le_bytes(fixed[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(SdpError::UnsupportedVersion(version));
        }
        let n = u64::from_le_bytes(fixed[8..16].try_into().unwrap());
        let m = u64::from_le_bytes(fixed[16..24].try_into().unwrap());
        let has_initial_dual = match fixed[24] {
            0 => false,
            1 => true,
            other => {
                return Err(SdpError::InvalidHeader(format!(
                    "has_initial_dual byte is {other}, expected 0 or 1"
                )))
            }
        };
        let header = SdpHeader {
            n: usize::try_from(n)
                .map_err(|_| SdpError::InvalidHeader(format!("n={n} too large")))?,
            m: usize::try_from(m)
                .map_err(|_| SdpError::InvalidHeader(format!("m={m} too large")))?,
            has_initial_dual,
        };
        header.validate()?;
        let expected = header.file_len()?;
        let block_start = header.constraint_offset();
        if actual < block_start {
            return Err(SdpError::Truncated {
                section: "objective/right-hand-side block",
                expected,
                actual,
            });
        }
        if actual < expected {
            return Err(SdpError::Truncated {
                section: "constraint block",
                expected,
                actual,
            });
        }
        if actual > expected {
            return Err(SdpError::TrailingData { expected, actual });
        }

        let (n, m) = (header.n, header.m);
        let mut offset = HEADER_LEN;
        let mut raw = Vec::new();
        let mut c = DMatrix::zeros(n, n);
        read_matrix(&mut reader, &mut raw, &mut c, "C", offset)?;
        linalg::check_symmetric(&c, || "C".to_string())?;
        offset += 8 * (n * n) as u64;
        let b = read_vector(&mut reader, &mut raw, m, "b", offset)?;
        offset += 8 * m as u64;
        let y0 = if has_initial_dual {
            Some(read_vector(&mut reader, &mut raw, m, "y0", offset)?)
        } else {
            None
        };

        let instance = SdpInstance { header, c, b, y0 };
        let stream = ConstraintStream {
            reader,
            header,
            block_start,
            cursor: 0,
            pass_count: 0,
            bytes_read: 0,
            raw,
            buf: DMatrix::zeros(n, n),
        };
        Ok((instance, stream))
    }

    pub fn header(&self) -> SdpHeader {
        self.header
    }

    pub fn n(&self) -> usize {
        self.header.n
    }

    pub fn m(&self) -> usize {
        self.header.m
    }

    pub fn pass_count(&self) -> u64 {
        self.pass_count
    }

    /// Bytes of constraint data read so far, across all passes.
    pub fn bytes_read(&self) -> u64 {
        self.bytes_read
    }

    /// Index (0-based) of the next constraint to be delivered.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Words held by the stream's reusable constraint buffer.
    pub fn buffer_words(&self) -> usize {
        self.header.n * self.header.n
    }

    /// Seeks back to `A_1` and starts a new pass.
    pub fn rewind(&mut self) -> Result<()> {
        self.reader.seek(SeekFrom::Start(self.block_start))?;
        self.cursor = 0;
        self.pass_count += 1;
        Ok(())
    }

    /// Next constraint as `(index, A_index)` with a 0-based index, or `None`
    /// at end of pass. The matrix lives in a buffer reused across calls.
    pub fn next_constraint(&mut self) -> Result<Option<(usize, &SymMatrix)>> {
        if self.cursor >= self.header.m {
            return Ok(None);
        }
        let index = self.cursor;
        let n = self.header.n;
        let offset = self.block_start + 8 * (index * n * n) as u64;
        let section = format!("A_{}", index + 1);
        read_matrix(&mut self.reader, &mut self.raw, &mut self.buf, &section, offset)?;
        linalg::check_symmetric(&self.buf, || section.clone())?;
        self.bytes_read += 8 * (n * n) as u64;
        self.cursor += 1;
        Ok(Some((index, &self.buf)))
    }

    /// Runs one full pass, handing each constraint to `f` in order.
    pub fn scan<F>(&mut self, mut f: F) -> Result<()>
    where
        F: FnMut(usize, &SymMatrix) -> Result<()>,
    {
        self.rewind()?;
        while let Some((i, a)) = self.next_constraint()? {
            f(i, a)?;
        }
        Ok(())
    }

    /// `S(y) = Σ y_i A_i − C` in one pass.
    pub fn form_slack(&mut self, c: &SymMatrix, y: &DVector<f64>) -> Result<SymMatrix> {
        if y.len() != self.m() {
            return Err(SdpError::DimensionMismatch(format!(
                "y has length {}, expected {}",
                y.len(),
                self.m()
            )));
        }
        let mut s = -c.clone();
        self.scan(|i, a| {
            let yi = y[i];
            s.zip_apply(a, |x, v| *x += yi * v);
            Ok(())
        })?;
        linalg::symmetrize(&mut s);
        Ok(s)
    }
}

fn read_floats<R: Read>(
    reader: &mut R,
    raw: &mut Vec<u8>,
    count: usize,
    section: &str,
    offset: u64,
) -> Result<()> {
    raw.resize(8 * count, 0);
    reader.read_exact(raw).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            SdpError::Truncated {
                section: "constraint block",
                expected: offset + 8 * count as u64,
                actual: offset,
            }
        } else {
            SdpError::Io(e)
        }
    })?;
    for (k, chunk) in raw.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(SdpError::NonFinite {
                section: section.to_string(),
                index: k,
                offset: offset + 8 * k as u64,
            });
        }
    }
    Ok(())
}

fn read_matrix<R: Read>(
    reader: &mut R,
    raw: &mut Vec<u8>,
    out: &mut DMatrix<f64>,
    section: &str,
    offset: u64,
) -> Result<()> {
    let n = out.nrows();
    read_floats(reader, raw, n * n, section, offset)?;
    for (k, chunk) in raw.chunks_exact(8).enumerate() {
        out[(k / n, k % n)] = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok(())
}

fn read_vector<R: Read>(
    reader: &mut R,
    raw: &mut Vec<u8>,
    len: usize,
    section: &str,
    offset: u64,
) -> Result<DVector<f64>> {
    read_floats(reader, raw, len, section, offset)?;
    Ok(DVector::from_iterator(
        len,
        raw.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
    ))
}

/// Norms entering the accuracy bounds of the solver's output certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceStats {
    /// `Σ_i ‖A_i‖₁` (Schatten 1-norms).
    pub sum_schatten1: f64,
    pub b_l1: f64,
    /// `‖C‖`, spectral norm.
    pub c_spectral: f64,
    pub r_hint: Option<f64>,
}

/// One pass computing [`InstanceStats`]; Schatten norms come from per-constraint eigenvalues.
pub fn compute_stats<R: Read + Seek>(
    stream: &mut ConstraintStream<R>,
    instance: &SdpInstance,
    r_hint: Option<f64>,
) -> Result<InstanceStats> {
    let mut sum_schatten1 = 0.0;
    stream.scan(|_, a| {
        sum_schatten1 += linalg::schatten1(a)?;
        Ok(())
    })?;
    let c_spectral = linalg::spectral_norm(&instance.c)?;
    let b_l1 = instance.b.iter().map(|v| v.abs()).sum();
    if !sum_schatten1.is_finite() {
        return Err(SdpError::NonFiniteEigenvalue("constraint stats".into()));
    }
    Ok(InstanceStats {
        sum_schatten1,
        b_l1,
        c_spectral,
        r_hint,
    })
}

/// Instance families produced by [`generate_feasible`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Random,
    MaxCut,
}

impl std::str::FromStr for InstanceKind {
    type Err = SdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(InstanceKind::Random),
            "maxcut" | "max-cut" => Ok(InstanceKind::MaxCut),
            other => Err(SdpError::InvalidParameter(format!(
                "unknown instance kind {other:?} (expected random or maxcut)"
            ))),
        }
    }
}

fn gaussian_symmetric(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v: f64 = rng.sample(StandardNormal);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Random instance with planted strict primal and dual feasibility.
///
/// Returns the instance and the primal witness `X₀ = GGᵀ + I` with
/// `b_i = ⟨A_i, X₀⟩`; `C` is chosen so that `S(y0) = I` exactly.
pub fn random_instance(n: usize, m: usize, seed: u64) -> Result<(InstanceData, SymMatrix)> {
    if n == 0 || m == 0 {
        return Err(SdpError::InvalidParameter(format!(
            "n={n} m={m}, both must be at least 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constraints: Vec<SymMatrix> = (0..m).map(|_| gaussian_symmetric(&mut rng, n)).collect();
    let y0 = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x0 = &g * g.transpose() + DMatrix::identity(n, n);
    linalg::symmetrize(&mut x0);

    let mut c = DMatrix::<f64>::zeros(n, n);
    for (a, yi) in constraints.iter().zip(y0.iter()) {
        c.zip_apply(a, |x, v| *x += *yi * v);
    }
    for i in 0..n {
        c[(i, i)] -= 1.0;
    }
    linalg::symmetrize(&mut c);

    let b = DVector::from_iterator(
        m,
        constraints
            .iter()
            .map(|a| linalg::trace_product(a, &x0).expect("square")),
    );
    Ok((
        InstanceData {
            c,
            b,
            y0: Some(y0),
            constraints,
        },
        x0,
    ))
}

/// Max-cut relaxation `max ⟨L/4, X⟩, X_ii = 1` for a weighted graph on `n` vertices.
///
/// `edges` are `(u, v, w)` with 0-based vertices. The start point is the
/// diagonal `y0_i = ‖C‖₁ + 1`, which dominates `C` spectrally.
pub fn maxcut_instance(n: usize, edges: &[(usize, usize, f64)]) -> Result<InstanceData> {
    if n == 0 {
        return Err(SdpError::InvalidParameter("max-cut needs n ≥ 1".into()));
    }
    let mut laplacian = DMatrix::<f64>::zeros(n, n);
    for &(u, v, w) in edges {
        if u >= n || v >= n || u == v {
            return Err(SdpError::InvalidParameter(format!(
                "edge ({u}, {v}) invalid for n={n}"
            )));
        }
        laplacian[(u, u)] += w;
        laplacian[(v, v)] += w;
        laplacian[(u, v)] -= w;
        laplacian[(v, u)] -= w;
    }
    let c = laplacian / 4.0;
    let start = linalg::schatten1(&c)? + 1.0;
    let constraints = (0..n)
        .map(|i| {
            let mut a = DMatrix::zeros(n, n);
            a[(i, i)] = 1.0;
            a
        })
        .collect();
    Ok(InstanceData {
        c,
        b: DVector::from_element(n, 1.0),
        y0: Some(DVector::from_element(n, start)),
        constraints,
    })
}

/// Seeded test instance of the given family.
///
/// `MaxCut` ignores `m` (the relaxation has one constraint per vertex) and
/// draws an Erdős–Rényi graph with edge probability 1/2 and unit weights.
pub fn generate_feasible(n: usize, m: usize, seed: u64, kind: InstanceKind) -> Result<InstanceData> {
    match kind {
        InstanceKind::Random => random_instance(n, m, seed).map(|(data, _)| data),
        InstanceKind::MaxCut => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random_bool(0.5) {
                        edges.push((u, v, 1.0));
                    }
                }
            }
            maxcut_instance(n, &edges)
        }
    }
}
