use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bskin_core::baseline::{export_baselines, Profile};
use bskin_core::deformer::export_deformed_baselines;
use bskin_core::encoder::{encode_cloud, read_encoded, write_encoded, EncodedSet};
use bskin_core::fixtures;
use bskin_core::io::{load_cloud, load_pose, load_skeleton, save_cloud, Format, PointCloud};
use bskin_core::pipeline::SkinOptions;
use bskin_core::sphere_mesh::{Pose, Skeleton, SkeletonFile};
use bskin_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::{exit_code, Method, Model};

#[derive(Debug, Parser)]
#[command(name = "bskin", version, about = "Pose a point cloud through a sphere-mesh skeleton")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Cubic,
    Linear,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Profile {
        match p {
            ProfileArg::Cubic => Profile::Cubic,
            ProfileArg::Linear => Profile::Linear,
        }
    }
}

#[derive(Debug, Args)]
struct DeformFlags {
    #[arg(long, value_enum, default_value_t = Method::Baseline)]
    method: Method,
    /// Angle profile of deformed baselines.
    #[arg(long = "profile-pos", value_enum, default_value_t = ProfileArg::Cubic)]
    profile_pos: ProfileArg,
    /// Direction-field profile; defaults to the one used at encoding.
    #[arg(long = "profile-dir", value_enum)]
    profile_dir: Option<ProfileArg>,
    #[arg(long = "no-modulation")]
    no_modulation: bool,
    #[arg(long = "no-smoothing")]
    no_smoothing: bool,
}

impl DeformFlags {
    fn options(&self) -> SkinOptions {
        SkinOptions {
            profile_position: self.profile_pos.into(),
            profile_direction: self.profile_dir.map(Into::into),
            modulation: !self.no_modulation,
            unfold_smoothing: !self.no_smoothing,
            ..Default::default()
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a cloud against a rest skeleton.
    Encode {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        skeleton: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Direction-field profile stored with the encoding.
        #[arg(long = "profile-dir", value_enum, default_value_t = ProfileArg::Cubic)]
        profile_dir: ProfileArg,
    },
    /// Re-synthesize an encoded cloud for a pose.
    Deform {
        #[arg(long)]
        encoded: PathBuf,
        #[arg(long)]
        skeleton: PathBuf,
        #[arg(long)]
        pose: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: DeformFlags,
    },
    /// Encode and deform in one go.
    Bake {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        skeleton: PathBuf,
        #[arg(long)]
        pose: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: DeformFlags,
    },
    /// Sampled baselines of a posed skeleton, as JSON.
    Baselines {
        #[arg(long)]
        skeleton: PathBuf,
        #[arg(long)]
        pose: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API for one model.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        skeleton: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
    /// Write a synthetic skeleton, cloud and pose to a directory.
    Sample {
        #[arg(long, value_enum, default_value_t = SampleModel::Stripes)]
        model: SampleModel,
        #[arg(long, default_value_t = 20_000)]
        points: usize,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleModel {
    Stripes,
    Figure,
}

#[derive(Serialize)]
struct BaselinesFile {
    version: u32,
    baselines: Vec<bskin_core::baseline::BaselinePolyline>,
}

/// Samples per baseline piece in exported polylines.
pub const PER_PIECE: usize = 16;

pub fn baselines_json(rest: &Skeleton, pose: Option<&Pose>, count: usize) -> Result<String, Error> {
    let baselines = match pose {
        Some(p) if !p.is_identity() => export_deformed_baselines(rest, &rest.apply_pose(p)?, count, PER_PIECE),
        _ => export_baselines(rest, count, PER_PIECE),
    };
    Ok(serde_json::to_string(&BaselinesFile { version: 1, baselines })?)
}

fn read_set(path: &Path) -> Result<EncodedSet, Error> {
    read_encoded(&mut BufReader::new(File::open(path)?))
}

fn write_set(path: &Path, set: &EncodedSet) -> Result<(), Error> {
    let mut w = BufWriter::new(File::create(path)?);
    write_encoded(&mut w, set)?;
    w.flush()?;
    Ok(())
}

fn encode_file(points: &Path, skeleton: &Path, profile: Profile) -> Result<(Skeleton, EncodedSet), Error> {
    let sk = load_skeleton(skeleton)?;
    let cloud = load_cloud(points)?;
    let file: SkeletonFile = serde_json::from_slice(&std::fs::read(skeleton)?)?;
    let registration = match file.registration {
        Some(ids) if ids.len() == cloud.len() => Some(sk.registration_from_ids(&ids)?),
        _ => None,
    };
    let set = encode_cloud(&sk, registration.as_ref(), &cloud.positions, profile)?;
    Ok((sk, set))
}

fn deform_to(model: &Model, pose: &Path, out: &Path, flags: &DeformFlags) -> Result<(), Error> {
    let pose = load_pose(pose)?;
    let (points, report) = model.deform(&pose, flags.method, &flags.options())?;
    if let Some(r) = report {
        log::info!("{}", serde_json::to_string(&r)?);
    }
    save_cloud(&PointCloud::new(points), out, Format::from_path(out)?)
}

fn sample(model: SampleModel, n: usize, dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let (sk, pts, pose) = match model {
        SampleModel::Stripes => {
            let sk = fixtures::stripe_model();
            let pts = fixtures::stripe_cloud(&sk, n, 1);
            (sk, pts, Pose::bend(1, bskin_core::Vec3::z(), 0.9).with_twist(2, 0.6))
        }
        SampleModel::Figure => {
            let sk = fixtures::figure();
            let pts = fixtures::surface_cloud(&sk, n, 1, |k, psi, d| {
                0.03 + 0.02 * (4.0 * psi + k as f64).sin() * (std::f64::consts::PI * d).sin()
            });
            (sk, pts, Pose::bend(1, bskin_core::Vec3::z(), 0.6).with_twist(2, 0.5))
        }
    };
    std::fs::write(dir.join("skeleton.json"), serde_json::to_string_pretty(&sk.to_file())?)?;
    std::fs::write(dir.join("pose.json"), serde_json::to_string_pretty(&pose)?)?;
    let cloud = PointCloud::new(pts.into_iter().map(|s| s.point).collect());
    save_cloud(&cloud, &dir.join("points.ply"), Format::PlyBinary)
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Encode {
            points,
            skeleton,
            out,
            profile_dir,
        } => {
            let (_, set) = encode_file(&points, &skeleton, profile_dir.into())?;
            log::info!("encoded {} points, {} rigid", set.points.len(), set.rigid_count());
            write_set(&out, &set)
        }
        Command::Deform {
            encoded,
            skeleton,
            pose,
            out,
            flags,
        } => {
            let model = Model::from_encoded(load_skeleton(&skeleton)?, read_set(&encoded)?)?;
            deform_to(&model, &pose, &out, &flags)
        }
        Command::Bake {
            points,
            skeleton,
            pose,
            out,
            flags,
        } => {
            let (sk, set) = encode_file(&points, &skeleton, Profile::Cubic)?;
            // same path as encode + deform: rest points rebuilt from the encoding
            let model = Model::from_encoded(sk, set)?;
            deform_to(&model, &pose, &out, &flags)
        }
        Command::Baselines {
            skeleton,
            pose,
            count,
            out,
        } => {
            let sk = load_skeleton(&skeleton)?;
            let pose = pose.map(|p| load_pose(&p)).transpose()?;
            std::fs::write(out, baselines_json(&sk, pose.as_ref(), count)?)?;
            Ok(())
        }
        Command::Serve {
            port,
            host,
            skeleton,
            points,
        } => {
            let (sk, set) = encode_file(&points, &skeleton, Profile::Cubic)?;
            // serve the cloud as the pipeline reproduces it, so an identity
            // pose returns the same bytes as /api/points
            let model = Model::from_encoded(sk, set)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::server::serve(&host, port, model))
        }
        Command::Sample { model, points, out_dir } => sample(model, points, &out_dir),
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
