//! Output files and formatting.
//!
//! Every command writes a `manifest.json` naming the config fingerprint,
//! tool version, master seed, and the files it produced, and every file it
//! lists carries that fingerprint itself — a `# manifest <hex>` comment on
//! CSVs, a `fingerprint` field on JSON reports — so a stray file can always
//! be traced to its run. Accumulator JSON is written compactly and
//! deterministically: identical configs produce byte-identical files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

/// All printed numbers carry 12 significant digits: enough to compare runs
/// bit-honestly without drowning the reader in noise.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Hash of the semantic config: identical fingerprints mean identical
    /// counts on rerun.
    pub fingerprint: String,
    pub master_seed: u64,
    pub created_utc: String,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, fingerprint: String, master_seed: u64) -> Self {
        Manifest {
            tool: "xxring",
            version: env!("CARGO_PKG_VERSION"),
            command,
            fingerprint,
            master_seed,
            created_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: vec![],
        }
    }
}

/// Fingerprint for configs that do not carry their own: a hash of the
/// serialized structure, tagged by command so different report kinds never
/// collide.
pub fn fingerprint_of<T: Serialize>(tag: &str, value: &T) -> String {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(value).expect("config serializes"));
    let mut out = String::with_capacity(64);
    for byte in h.finalize() {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// A JSON report with the run fingerprint stamped ahead of its body.
#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    fingerprint: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub struct OutDir {
    dir: PathBuf,
    fingerprint: String,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path, fingerprint: String) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            fingerprint,
            written: vec![],
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Failure::Io(format!("{name}: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// JSON report: the body's fields preceded by the run fingerprint.
    /// `body` must serialize to a map.
    pub fn write_report<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), Failure> {
        let fp = self.fingerprint.clone();
        let stamped = Stamped {
            fingerprint: &fp,
            body,
        };
        self.write_json(name, &stamped)
    }

    /// Stream a CSV through `fill`, recording the file on success. The first
    /// line is always a `# manifest <fingerprint>` comment tying the file to
    /// its run; the column header follows.
    pub fn write_csv(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), Failure>,
    ) -> Result<(), Failure> {
        let path = self.path(name);
        let file =
            fs::File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "# manifest {}", self.fingerprint)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        fill(&mut w)?;
        w.flush()
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Write the manifest last so it lists every other output.
    pub fn finish(mut self, command: &'static str, master_seed: u64) -> Result<(), Failure> {
        let mut manifest = Manifest::new(command, self.fingerprint.clone(), master_seed);
        manifest.outputs = self.written.clone();
        self.write_json("manifest.json", &manifest)?;
        for name in &self.written {
            println!("wrote {}", self.path(name).display());
        }
        Ok(())
    }
}

pub fn histogram_csv(h: &xxring::Histogram) -> String {
    let edges = h.bin_edges();
    let dens = h.densities();
    let mut s = String::from("bin_lo,bin_hi,density\n");
    for (b, d) in dens.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{}\n",
            sig12(edges[b]),
            sig12(edges[b + 1]),
            sig12(*d)
        ));
    }
    s
}
