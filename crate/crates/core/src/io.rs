//! Interchange formats.
//!
//! Potentials: `{"m", "form", "N", "coeffs": [{"gamma", "n", "re", "im"}, ...]}`.
//! Spectral data: `{"m", "N", "S": [{"n", "j", "re", "im"}, ...]}`.
//! Omitted entries are zero and unknown top-level fields are ignored, so
//! documents written with extra metadata can be read back directly.
//!
//! Complex numbers are always written as separate `re`/`im` fields, and floats
//! as `{:.16e}` (17 significant digits) so output is bitwise reproducible.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::characterize::DetScan;
use crate::forward::SpectralData;
use crate::lattice::{Form, FourierPotential, ModelOrder};
use crate::{Error, Result, C64};

/// `#[serde(with = "cplx")]` for `C64` as `{"re": .., "im": ..}`.
pub mod cplx {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::C64;

    #[derive(Serialize, Deserialize)]
    struct ReIm {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        ReIm { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let v = ReIm::deserialize(d)?;
        Ok(C64::new(v.re, v.im))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(zs: &[C64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(zs.iter().map(|z| ReIm { re: z.re, im: z.im }))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
            let v: Vec<ReIm> = Vec::deserialize(d)?;
            Ok(v.into_iter().map(|x| C64::new(x.re, x.im)).collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub gamma: usize,
    pub n: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialDoc {
    pub m: i64,
    pub form: Form,
    #[serde(rename = "N")]
    pub n_max: usize,
    #[serde(default)]
    pub coeffs: Vec<CoeffEntry>,
}

impl PotentialDoc {
    /// Every slot `(gamma, n)` is written, zeros included.
    pub fn from_potential(q: &FourierPotential) -> Self {
        let mut coeffs = Vec::new();
        for gamma in 0..=q.order().top_gamma() {
            for n in 1..=q.n_max() {
                let v = q.get(gamma, n);
                coeffs.push(CoeffEntry {
                    gamma,
                    n,
                    re: v.re,
                    im: v.im,
                });
            }
        }
        Self {
            m: q.order().m() as i64,
            form: q.form(),
            n_max: q.n_max(),
            coeffs,
        }
    }

    pub fn to_potential(&self) -> Result<FourierPotential> {
        let order = order_from(self.m)?;
        if self.n_max == 0 {
            return Err(Error::InvalidInput("N must be >= 1".into()));
        }
        let mut entries = Vec::with_capacity(self.coeffs.len());
        for e in &self.coeffs {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite coefficient at gamma={}, n={}",
                    e.gamma, e.n
                )));
            }
            entries.push((e.gamma, e.n, C64::new(e.re, e.im)));
        }
        FourierPotential::from_entries(order, self.form, self.n_max, entries)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    pub n: usize,
    pub j: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDoc {
    pub m: i64,
    #[serde(rename = "N")]
    pub n_max: usize,
    #[serde(rename = "S", default)]
    pub s: Vec<SpectralEntry>,
}

impl SpectralDoc {
    pub fn from_data(s: &SpectralData) -> Self {
        let mut out = Vec::new();
        for n in 1..=s.n_max() {
            for j in 1..=s.order().branches() {
                let v = s.get(n, j);
                out.push(SpectralEntry {
                    n,
                    j,
                    re: v.re,
                    im: v.im,
                });
            }
        }
        Self {
            m: s.order().m() as i64,
            n_max: s.n_max(),
            s: out,
        }
    }

    pub fn to_data(&self) -> Result<SpectralData> {
        let order = order_from(self.m)?;
        if self.n_max == 0 {
            return Err(Error::InvalidInput("N must be >= 1".into()));
        }
        let mut data = SpectralData::zeros(order, self.n_max);
        let mut seen = BTreeSet::new();
        for e in &self.s {
            if e.n == 0 || e.n > self.n_max {
                return Err(Error::InvalidInput(format!(
                    "S entry n={} outside [1, {}]",
                    e.n, self.n_max
                )));
            }
            order.check_branch(e.j)?;
            if !seen.insert((e.n, e.j)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate S entry (n={}, j={})",
                    e.n, e.j
                )));
            }
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite S entry (n={}, j={})",
                    e.n, e.j
                )));
            }
            data.set(e.n, e.j, C64::new(e.re, e.im));
        }
        Ok(data)
    }
}

fn order_from(m: i64) -> Result<ModelOrder> {
    if m < 1 {
        return Err(Error::InvalidOrder(m));
    }
    ModelOrder::new(m as usize)
}

pub fn read_potential(text: &str) -> Result<FourierPotential> {
    serde_json::from_str::<PotentialDoc>(text)?.to_potential()
}

pub fn read_spectral(text: &str) -> Result<SpectralData> {
    serde_json::from_str::<SpectralDoc>(text)?.to_data()
}

/// Pretty JSON with every float written as `{:.16e}`; NaN and infinities become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

#[derive(Default)]
struct FixedFloat {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.pretty.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for FixedFloat {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        if v.is_finite() {
            write!(w, "{v:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        self.write_f64(w, v as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// Float formatting shared by the CSV writers.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".into()
    }
}

/// `re_z,im_z,re_D,im_D,abs_D,delta_N`, one row per grid node.
pub fn write_scan_csv(scan: &DetScan, mut w: impl Write) -> Result<()> {
    writeln!(w, "re_z,im_z,re_D,im_D,abs_D,delta_N")?;
    for iy in 0..=scan.grid.ny {
        for ix in 0..=scan.grid.nx {
            let z = scan.grid.node(ix, iy);
            let k = iy * (scan.grid.nx + 1) + ix;
            let d = scan.values[k];
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(d.re),
                fmt_f64(d.im),
                fmt_f64(d.norm()),
                fmt_f64(scan.deltas[k])
            )?;
        }
    }
    Ok(())
}

/// One kernel sample for [`write_kernel_csv`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSample {
    pub t: f64,
    pub u: f64,
    pub k: C64,
    pub error_bound: f64,
}

/// `t,u,re_K,im_K,error_bound`.
pub fn write_kernel_csv(rows: &[KernelSample], mut w: impl Write) -> Result<()> {
    writeln!(w, "t,u,re_K,im_K,error_bound")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.u),
            fmt_f64(r.k.re),
            fmt_f64(r.k.im),
            fmt_f64(r.error_bound)
        )?;
    }
    Ok(())
}
