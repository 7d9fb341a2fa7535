//! `key = value` pipeline configuration.

use std::path::Path;

use super::{IoError, Result};
use crate::descriptor::DescriptorConfig;
use crate::ecv::ExtractConfig;
use crate::eval::DEFAULT_THRESHOLD;
use crate::icp::IcpConfig;
use crate::matching::{MatchOptions, SearchMode};
use crate::ransac::{required_iterations, RansacConfig};

/// Every tunable of the pipeline. Keys are listed in [`PipelineConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub extract: ExtractConfig,
    pub descriptor: DescriptorConfig,
    pub matching: MatchOptions,
    /// `iterations` here is ignored unless `iterations_override` is set.
    pub ransac: RansacConfig,
    pub p: f64,
    pub w: f64,
    pub iterations_override: Option<usize>,
    pub icp: IcpConfig,
    pub threshold: f64,
    pub color_offset: bool,
    pub noise_sigma: f64,
    pub occlusion_fraction: f64,
    pub texture_seed: u64,
    /// Accepted for compatibility; the pipeline is single-threaded. 0 = auto.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            extract: ExtractConfig::default(),
            descriptor: DescriptorConfig::default(),
            matching: MatchOptions::default(),
            ransac: RansacConfig::default(),
            p: 0.99,
            w: 0.05,
            iterations_override: None,
            icp: IcpConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            color_offset: false,
            noise_sigma: 0.0,
            occlusion_fraction: 0.0,
            texture_seed: 0,
            threads: 0,
        }
    }
}

fn opt_to_string<T: ToString>(v: Option<T>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |x| x.to_string())
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "center_wavelength",
        "bandwidth",
        "cell_diameter",
        "magnitude_threshold",
        "tau_m",
        "tau_o",
        "normal_radius",
        "radius",
        "min_neighbors",
        "mixed_kinds",
        "normalize",
        "same_kind_only",
        "ratio",
        "search_leaves",
        "n",
        "p",
        "w",
        "iterations",
        "t_poly",
        "inlier_dist",
        "min_inlier_fraction",
        "convergence_error",
        "prefilter",
        "seed",
        "icp_max_iterations",
        "icp_reject_dist",
        "icp_convergence_delta",
        "threshold",
        "color_offset",
        "noise_sigma",
        "occlusion_fraction",
        "texture_seed",
        "threads",
    ];

    /// RANSAC settings with the iteration count resolved from `p`, `w`, `n`
    /// unless overridden.
    pub fn ransac_config(&self) -> RansacConfig {
        let iterations = self.iterations_override.unwrap_or_else(|| {
            required_iterations(self.p, self.w, self.ransac.sample_size).expect("validated on load")
        });
        RansacConfig {
            iterations,
            ..self.ransac
        }
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let e = &self.extract;
        let d = &self.descriptor;
        let r = &self.ransac;
        Some(match key {
            "center_wavelength" => e.center_wavelength.to_string(),
            "bandwidth" => e.bandwidth.to_string(),
            "cell_diameter" => e.cell_diameter.to_string(),
            "magnitude_threshold" => e.magnitude_threshold.to_string(),
            "tau_m" => e.thresholds.tau_m.to_string(),
            "tau_o" => e.thresholds.tau_o.to_string(),
            "normal_radius" => e.normal_radius.to_string(),
            "radius" => d.radius.to_string(),
            "min_neighbors" => d.min_neighbors.to_string(),
            "mixed_kinds" => d.mixed_kinds.to_string(),
            "normalize" => d.normalize.to_string(),
            "same_kind_only" => self.matching.same_kind_only.to_string(),
            "ratio" => opt_to_string(self.matching.ratio, "none"),
            "search_leaves" => match self.matching.mode {
                SearchMode::Exact => "0".to_string(),
                SearchMode::Approximate { max_leaves } => max_leaves.to_string(),
            },
            "n" => r.sample_size.to_string(),
            "p" => self.p.to_string(),
            "w" => self.w.to_string(),
            "iterations" => opt_to_string(self.iterations_override, "auto"),
            "t_poly" => r.t_poly.to_string(),
            "inlier_dist" => r.inlier_dist.to_string(),
            "min_inlier_fraction" => r.min_inlier_fraction.to_string(),
            "convergence_error" => opt_to_string(r.convergence_error, "none"),
            "prefilter" => r.prefilter.to_string(),
            "seed" => r.seed.to_string(),
            "icp_max_iterations" => self.icp.max_iterations.to_string(),
            "icp_reject_dist" => self.icp.reject_dist.to_string(),
            "icp_convergence_delta" => self.icp.convergence_delta.to_string(),
            "threshold" => self.threshold.to_string(),
            "color_offset" => self.color_offset.to_string(),
            "noise_sigma" => self.noise_sigma.to_string(),
            "occlusion_fraction" => self.occlusion_fraction.to_string(),
            "texture_seed" => self.texture_seed.to_string(),
            "threads" => self.threads.to_string(),
            _ => return None,
        })
    }

    /// Sets one key, validating the value against the owning module.
    /// Unknown keys are reported with `line`.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let invalid = |message: String| IoError::InvalidValue {
            key: key.to_string(),
            message,
        };
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse::<T>().map_err(|_| format!("cannot parse '{v}'"))
        }
        fn flag(v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                _ => Err(format!("expected a boolean, got '{v}'")),
            }
        }
        fn optional<T: std::str::FromStr>(v: &str, none: &str) -> std::result::Result<Option<T>, String> {
            if v == none {
                Ok(None)
            } else {
                num(v).map(Some)
            }
        }

        let mut next = self.clone();
        let e = &mut next.extract;
        let d = &mut next.descriptor;
        let r = &mut next.ransac;
        let parsed: std::result::Result<(), String> = (|| {
            match key {
                "center_wavelength" => e.center_wavelength = num(value)?,
                "bandwidth" => e.bandwidth = num(value)?,
                "cell_diameter" => e.cell_diameter = num(value)?,
                "magnitude_threshold" => e.magnitude_threshold = num(value)?,
                "tau_m" => e.thresholds.tau_m = num(value)?,
                "tau_o" => e.thresholds.tau_o = num(value)?,
                "normal_radius" => e.normal_radius = num(value)?,
                "radius" => d.radius = num(value)?,
                "min_neighbors" => d.min_neighbors = num(value)?,
                "mixed_kinds" => d.mixed_kinds = flag(value)?,
                "normalize" => d.normalize = flag(value)?,
                "same_kind_only" => next.matching.same_kind_only = flag(value)?,
                "ratio" => next.matching.ratio = optional(value, "none")?,
                "search_leaves" => {
                    next.matching.mode = match num::<usize>(value)? {
                        0 => SearchMode::Exact,
                        max_leaves => SearchMode::Approximate { max_leaves },
                    }
                }
                "n" => r.sample_size = num(value)?,
                "p" => next.p = num(value)?,
                "w" => next.w = num(value)?,
                "iterations" => next.iterations_override = optional(value, "auto")?,
                "t_poly" => r.t_poly = num(value)?,
                "inlier_dist" => r.inlier_dist = num(value)?,
                "min_inlier_fraction" => r.min_inlier_fraction = num(value)?,
                "convergence_error" => r.convergence_error = optional(value, "none")?,
                "prefilter" => r.prefilter = flag(value)?,
                "seed" => r.seed = num(value)?,
                "icp_max_iterations" => next.icp.max_iterations = num(value)?,
                "icp_reject_dist" => next.icp.reject_dist = num(value)?,
                "icp_convergence_delta" => next.icp.convergence_delta = num(value)?,
                "threshold" => next.threshold = num(value)?,
                "color_offset" => next.color_offset = flag(value)?,
                "noise_sigma" => next.noise_sigma = num(value)?,
                "occlusion_fraction" => next.occlusion_fraction = num(value)?,
                "texture_seed" => next.texture_seed = num(value)?,
                "threads" => next.threads = num(value)?,
                _ => return Err(String::new()),
            }
            Ok(())
        })();
        match parsed {
            Ok(()) => {}
            Err(m) if m.is_empty() => {
                return Err(IoError::UnknownKey {
                    key: key.to_string(),
                    line,
                })
            }
            Err(m) => return Err(invalid(m)),
        }
        next.validate().map_err(invalid)?;
        *self = next;
        Ok(())
    }

    /// Checks every value against its module's preconditions.
    pub fn validate(&self) -> std::result::Result<(), String> {
        self.extract.validate().map_err(|e| e.to_string())?;
        self.descriptor.validate().map_err(|e| e.to_string())?;
        if let Some(r) = self.matching.ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(format!("ratio must lie in (0, 1], got {r}"));
            }
        }
        if self.iterations_override == Some(0) {
            return Err("iterations must be >= 1".into());
        }
        required_iterations(self.p, self.w, self.ransac.sample_size).map_err(|e| e.to_string())?;
        self.ransac_config().validate().map_err(|e| e.to_string())?;
        self.icp.validate().map_err(|e| e.to_string())?;
        if !(self.threshold > 0.0) {
            return Err(format!("threshold must be positive, got {}", self.threshold));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        if !(0.0..1.0).contains(&self.occlusion_fraction) {
            return Err(format!("occlusion_fraction must lie in [0, 1), got {}", self.occlusion_fraction));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            let (key, value) = t.split_once('=').ok_or_else(|| IoError::Parse {
                line,
                record: None,
                message: format!("expected 'key = value', found '{t}'"),
            })?;
            cfg.set(key.trim(), value.trim(), line)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        Self::KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(cfg.ransac_config().iterations, 36839);
    }

    #[test]
    fn every_key_is_gettable() {
        let cfg = PipelineConfig::default();
        for k in PipelineConfig::KEYS {
            assert!(cfg.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = PipelineConfig::parse("radius = 0.03\nbins = 32\n").unwrap_err();
        assert!(matches!(err, IoError::UnknownKey { ref key, line: 2 } if key == "bins"));
    }

    #[test]
    fn values_are_validated() {
        for text in [
            "t_poly = 1.5",
            "radius = -1",
            "min_inlier_fraction = 0",
            "cell_diameter = 2",
            "bandwidth = 0",
            "p = 1",
            "iterations = 0",
            "threshold = 0",
            "prefilter = maybe",
            "n = 2",
        ] {
            let err = PipelineConfig::parse(text).unwrap_err();
            assert_eq!(err.category(), "InvalidValue", "{text}");
        }
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = PipelineConfig::parse("# tuned\nt_poly = 0.1  # tighter\niterations = 500\nratio = 0.8\n").unwrap();
        assert_eq!(cfg.ransac.t_poly, 0.1);
        assert_eq!(cfg.ransac_config().iterations, 500);
        assert_eq!(cfg.matching.ratio, Some(0.8));
        assert!(PipelineConfig::parse("radius 0.1").is_err());
    }
}
