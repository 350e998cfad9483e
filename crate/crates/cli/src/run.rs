//! Stage execution, artifact bookkeeping and the run manifest.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use log::info;
use sha2::{Digest, Sha256};

use nearsamp_core::bie::Wavenumber;
use nearsamp_core::completion::{complete_matrix, restrict};
use nearsamp_core::imaging::{save_grid, sweep, ImagingGrid};
use nearsamp_core::nearfield::{self, add_noise, synthesize, NearFieldMatrix, SensorRing};
use nearsamp_core::Error;

use crate::config::{Config, ConfigError};
use crate::heatmap;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn core(stage: &str, e: Error) -> Failure {
        let msg = format!("{stage}: {e}");
        match e {
            e if e.is_numerical() => Failure::Numerical(msg),
            Error::Io(_) | Error::Format { .. } => Failure::Io(msg),
            _ => Failure::Config(msg),
        }
    }

    fn io(what: &Path, e: impl fmt::Display) -> Failure {
        Failure::Io(format!("{}: {e}", what.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

/// Files written by one invocation; removed again if the run fails.
pub struct Run {
    dir: PathBuf,
    created_dir: bool,
    heatmap: bool,
    artifacts: Vec<PathBuf>,
    notes: Vec<String>,
}

impl Run {
    pub fn new(dir: &Path, heatmap: bool) -> Result<Run, Failure> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            created_dir,
            heatmap,
            artifacts: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn note(&mut self, line: String) {
        self.notes.push(line);
    }

    fn claim(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.artifacts.push(path.clone());
        path
    }

    pub fn write_nfm(&mut self, name: &str, n: &NearFieldMatrix) -> Result<(), Failure> {
        let path = self.claim(name);
        nearfield::save(n, &path).map_err(|e| Failure::core("write", e))?;
        info!("wrote {}", path.display());
        Ok(())
    }

    /// Writes `<stem>.img` and, with heatmaps enabled, `<stem>.png`.
    pub fn write_grid(&mut self, stem: &str, grid: &ImagingGrid) -> Result<(), Failure> {
        let path = self.claim(&format!("{stem}.img"));
        save_grid(grid, &path).map_err(|e| Failure::core("write", e))?;
        info!("wrote {}", path.display());
        if self.heatmap {
            let png = self.claim(&format!("{stem}.png"));
            heatmap::save(grid, &png).map_err(|e| Failure::io(&png, e))?;
            info!("wrote {}", png.display());
        }
        Ok(())
    }

    /// Writes the manifest: the resolved parameters followed by one
    /// `artifact.<file>=<sha256>` line per output.
    pub fn finish(mut self, command: &str, config: &Config) -> Result<(), Failure> {
        let mut text = format!("command={command}\n");
        for n in &self.notes {
            text.push_str(n);
            text.push('\n');
        }
        text.push_str(&config.resolved());
        for path in &self.artifacts {
            let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
            let name = path.file_name().unwrap().to_string_lossy();
            text.push_str(&format!(
                "artifact.{name}={}\n",
                hex(&Sha256::digest(&bytes))
            ));
        }
        let path = self.claim(MANIFEST);
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        self.artifacts.clear();
        Ok(())
    }

    /// Removes everything this run wrote.
    pub fn abandon(self) {
        for path in &self.artifacts {
            match fs::remove_file(path) {
                Ok(()) => {}
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => log::warn!("could not remove {}: {e}", path.display()),
            }
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn wavenumber(config: &Config) -> Result<Wavenumber, Failure> {
    Wavenumber::new(config.k).map_err(|e| Failure::core("config", e))
}

pub fn load_nfm(path: &Path) -> Result<NearFieldMatrix, Failure> {
    nearfield::load(path).map_err(|e| Failure::core(&format!("read {}", path.display()), e))
}

pub fn stage_synthesize(config: &Config) -> Result<NearFieldMatrix, Failure> {
    let ring = SensorRing::new(config.ring_radius, config.ring_count, config.mode)
        .map_err(|e| Failure::core("synthesize", e))?;
    info!(
        "synthesize: {} component(s), {} sensors on radius {}, k = {}",
        config.scene.len(),
        config.ring_count,
        config.ring_radius,
        config.k
    );
    synthesize(
        &config.curves(),
        ring,
        wavenumber(config)?,
        config.bie_nodes,
    )
    .map_err(|e| Failure::core("synthesize", e))
}

pub fn stage_noise(n: &NearFieldMatrix, config: &Config) -> Result<NearFieldMatrix, Failure> {
    info!(
        "noise: delta = {}, seed = {}",
        config.noise_delta, config.noise_seed
    );
    add_noise(n, config.noise_delta, config.noise_seed).map_err(|e| Failure::core("noise", e))
}

pub fn stage_restrict(n: &NearFieldMatrix, config: &Config) -> Result<NearFieldMatrix, Failure> {
    let spec = config.completion.ok_or_else(|| {
        Failure::Config("restrict: no aperture.* keys in the configuration".into())
    })?;
    let out = restrict(n, spec.aperture).map_err(|e| Failure::core("restrict", e))?;
    info!("restrict: {} of {} sensors kept", out.dim(), n.dim());
    Ok(out)
}

pub fn stage_complete(n: &NearFieldMatrix, config: &Config) -> Result<NearFieldMatrix, Failure> {
    let (modes, eps) = config
        .completion
        .map(|c| (c.modes, c.eps))
        .unwrap_or((50, 1e-3));
    info!(
        "complete: {} -> {} sensors, J = {modes}, eps = {eps}",
        n.dim(),
        config.ring_count
    );
    complete_matrix(n, config.ring_count, modes, eps).map_err(|e| Failure::core("complete", e))
}

pub fn stage_image(n: &NearFieldMatrix, config: &Config) -> Result<ImagingGrid, Failure> {
    if n.ring.mode() != config.mode {
        return Err(Failure::Config(format!(
            "image: data are {} measurements but the configuration says mode={}",
            n.ring.mode(),
            config.mode
        )));
    }
    info!(
        "image: {}x{} grid, truncation {}",
        config.grid.nx, config.grid.ny, config.truncation
    );
    sweep(n, &config.grid, config.truncation).map_err(|e| Failure::core("image", e))
}

/// Full run: synthesize, add noise, image; with an aperture configured the
/// limited data are imaged directly and after completion.
pub fn pipeline(run: &mut Run, config: &Config) -> Result<(), Failure> {
    let clean = stage_synthesize(config)?;
    if config.save_nfm {
        run.write_nfm("clean.nfm", &clean)?;
    }
    match config.completion {
        None => {
            let noisy = stage_noise(&clean, config)?;
            if config.save_nfm {
                run.write_nfm("noisy.nfm", &noisy)?;
            }
            let grid = stage_image(&noisy, config)?;
            run.write_grid("image", &grid)
        }
        Some(_) => {
            let limited = stage_noise(&stage_restrict(&clean, config)?, config)?;
            if config.save_nfm {
                run.write_nfm("limited.nfm", &limited)?;
            }
            let direct = stage_image(&limited, config)?;
            run.write_grid("limited", &direct)?;
            let completed = stage_complete(&limited, config)?;
            if config.save_nfm {
                run.write_nfm("completed.nfm", &completed)?;
            }
            let grid = stage_image(&completed, config)?;
            run.write_grid("completed", &grid)
        }
    }
}
