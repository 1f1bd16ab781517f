//! Synthetic inputs and file handling: double moons, intensity noise,
//! grayscale images, resizing and CSV point sets.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{ColorType, GrayImage, ImageFormat, ImageReader, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{check_len, NcasError, Result};
use crate::field::{PointSet, ScalarField, INTENSITY_MAX};

/// Geometry of the two interleaved half-annuli.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoonSpec {
    pub n: usize,
    pub radius: f64,
    pub width: f64,
    /// Vertical gap between the moons; negative values make them overlap.
    pub separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for MoonSpec {
    fn default() -> Self {
        Self {
            n: 300,
            radius: 10.0,
            width: 6.0,
            separation: -2.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// `n/2` points on the upper half-annulus (label 0) and `n/2` on the lower
/// one shifted by `(radius, -separation)` (label 1), each coordinate then
/// perturbed by `N(0, noise_sigma^2)`.
pub fn double_moon(spec: MoonSpec) -> Result<PointSet> {
    let MoonSpec {
        n,
        radius,
        width,
        separation,
        noise_sigma,
        seed,
    } = spec;
    if n == 0 || n % 2 != 0 {
        return Err(NcasError::param(format!("point count {n} must be even and positive")));
    }
    if !(width >= 0.0 && radius > width / 2.0 && separation.is_finite()) {
        return Err(NcasError::param("moon geometry needs radius > width/2 >= 0"));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(NcasError::param("noise sigma must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut coords = Vec::with_capacity(2 * n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let theta = rng.random_range(0.0..=PI);
        let r = radius - width / 2.0 + width * rng.random::<f64>();
        let (x, y) = if i < half {
            (r * theta.cos(), r * theta.sin())
        } else {
            (r * theta.cos() + radius, -r * theta.sin() - separation)
        };
        coords.push(x);
        coords.push(y);
        truth.push(u8::from(i >= half));
    }
    if noise_sigma > 0.0 {
        for c in coords.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *c += noise_sigma * e;
        }
    }
    PointSet::new(2, coords, Some(truth))
}

/// Adds `N(0, (255 sqrt(variance))^2)` to every pixel and clamps to
/// `[0, 255]`; `variance` is quoted for intensities scaled to `[0, 1]`.
pub fn add_gaussian_noise(image: &ScalarField, variance: f64, seed: u64) -> Result<ScalarField> {
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(NcasError::param(format!("noise variance {variance} must be >= 0")));
    }
    if variance == 0.0 {
        return Ok(image.clone());
    }
    let normal = Normal::new(0.0, INTENSITY_MAX * variance.sqrt())
        .map_err(|e| NcasError::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = image
        .values()
        .iter()
        .map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, INTENSITY_MAX))
        .collect();
    image.with_values(values)
}

/// Two-level test image: `inside` on a centered disc of the given radius,
/// `outside` elsewhere. Truth is 1 inside.
pub fn two_region_image(
    width: usize,
    height: usize,
    radius: f64,
    inside: f64,
    outside: f64,
) -> Result<(ScalarField, Vec<u8>)> {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let in_disc = |x: usize, y: usize| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        dx * dx + dy * dy <= radius * radius
    };
    let img = ScalarField::from_fn(width, height, |x, y| {
        if in_disc(x, y) {
            inside
        } else {
            outside
        }
    })?;
    let truth = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| u8::from(in_disc(x, y)))
        .collect();
    let img = ScalarField::image(width, height, img.into_values())?;
    Ok((img, truth))
}

fn decode(path: &Path) -> Result<image::DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| NcasError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| NcasError::io(path, e))?;
    let img = reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) => NcasError::io(path, io),
        other => NcasError::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })?;
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => Ok(img),
        other => Err(NcasError::UnsupportedDepth {
            path: path.to_path_buf(),
            detail: format!("{other:?}"),
        }),
    }
}

/// Loads an 8-bit PNG or PGM as intensities in `[0, 255]`; color input is
/// converted to luma.
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let gray = decode(path)?.to_luma8();
    let (w, h) = gray.dimensions();
    ScalarField::image(
        w as usize,
        h as usize,
        gray.into_raw().into_iter().map(f64::from).collect(),
    )
}

/// Loads a label image: each distinct gray level is one class.
pub fn load_labels(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    let path = path.as_ref();
    let gray = decode(path)?.to_luma8();
    let (w, h) = gray.dimensions();
    Ok((w as usize, h as usize, gray.into_raw()))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| NcasError::io(dir, e))?;
    }
    Ok(())
}

fn write_gray(img: &GrayImage, path: &Path, format: ImageFormat) -> Result<()> {
    ensure_parent(path)?;
    img.save_with_format(path, format).map_err(|e| match e {
        image::ImageError::IoError(io) => NcasError::io(path, io),
        other => NcasError::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

/// Writes binary labels as a PNG with values 0 and 255.
pub fn save_labels(labels: &[u8], width: usize, height: usize, path: impl AsRef<Path>) -> Result<()> {
    check_len(width * height, labels.len())?;
    let img = GrayImage::from_fn(width as u32, height as u32, |x, y| {
        Luma([if labels[y as usize * width + x as usize] > 0 { 255 } else { 0 }])
    });
    write_gray(&img, path.as_ref(), ImageFormat::Png)
}

/// Sidecar path holding the affine map of a field dump.
pub fn scale_sidecar(path: &Path) -> PathBuf {
    path.with_extension("scale.txt")
}

/// Writes a field as an 8-bit PGM, mapping `[min, max]` affinely onto
/// `[0, 255]`, and records the map next to it. A constant field becomes a
/// uniform 0 image.
pub fn save_field(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (min, max) = field
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = max - min;
    let w = field.width();
    let img = GrayImage::from_fn(w as u32, field.height() as u32, |x, y| {
        let v = field.values()[y as usize * w + x as usize];
        let s = if span > 0.0 { (v - min) / span * 255.0 } else { 0.0 };
        Luma([s.round().clamp(0.0, 255.0) as u8])
    });
    write_gray(&img, path, ImageFormat::Pnm)?;
    let sidecar = scale_sidecar(path);
    let mut file = fs::File::create(&sidecar).map_err(|e| NcasError::io(&sidecar, e))?;
    writeln!(file, "min {min:e}\nmax {max:e}\n# value = min + gray / 255 * (max - min)")
        .map_err(|e| NcasError::io(&sidecar, e))
}

/// Bilinear resampling with pixel centers aligned and edges clamped.
pub fn resize_bilinear(image: &ScalarField, width: usize, height: usize) -> Result<ScalarField> {
    if width == 0 || height == 0 {
        return Err(NcasError::param("target size must be positive"));
    }
    let (sw, sh) = (image.width(), image.height());
    if (sw, sh) == (width, height) {
        return Ok(image.clone());
    }
    let sample = |coord: f64, n: usize| {
        let c = coord.clamp(0.0, n as f64 - 1.0);
        let i0 = c.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, c - i0 as f64)
    };
    let sx = sw as f64 / width as f64;
    let sy = sh as f64 / height as f64;
    let values = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| {
            let (x0, x1, fx) = sample((x as f64 + 0.5) * sx - 0.5, sw);
            let (y0, y1, fy) = sample((y as f64 + 0.5) * sy - 0.5, sh);
            let top = image.get(x0, y0) * (1.0 - fx) + image.get(x1, y0) * fx;
            let bottom = image.get(x0, y1) * (1.0 - fx) + image.get(x1, y1) * fx;
            top * (1.0 - fy) + bottom * fy
        })
        .collect();
    ScalarField::new(width, height, values)
}

/// Nearest-neighbor resampling for label maps.
pub fn resize_nearest(
    labels: &[u8],
    src_width: usize,
    src_height: usize,
    width: usize,
    height: usize,
) -> Result<Vec<u8>> {
    check_len(src_width * src_height, labels.len())?;
    if width == 0 || height == 0 {
        return Err(NcasError::param("target size must be positive"));
    }
    let pick = |i: usize, n: usize, src: usize| {
        (((i as f64 + 0.5) * src as f64 / n as f64).floor() as usize).min(src - 1)
    };
    Ok((0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| labels[pick(y, height, src_height) * src_width + pick(x, width, src_width)])
        .collect())
}

/// Reads `x,y[,label]` rows; a first row that does not parse as numbers is
/// taken as a header. Labels must be present on all rows or none.
pub fn read_points_csv(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut coords = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut with_labels = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        let bad = |message: String| NcasError::Csv {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        if i == 0 && parsed.iter().any(|p| p.is_err()) {
            continue;
        }
        if !(2..=3).contains(&record.len()) {
            return Err(bad(format!("expected 2 or 3 fields, found {}", record.len())));
        }
        let has_label = record.len() == 3;
        if *with_labels.get_or_insert(has_label) != has_label {
            return Err(bad("label column present on some rows only".into()));
        }
        for (j, p) in parsed.iter().take(2).enumerate() {
            match p {
                Ok(v) if v.is_finite() => coords.push(*v),
                _ => return Err(bad(format!("field {} is not a finite number", j + 1))),
            }
        }
        if has_label {
            match record[2].parse::<u8>() {
                Ok(l @ 0..=1) => labels.push(l),
                _ => return Err(bad(format!("label '{}' is not 0 or 1", &record[2]))),
            }
        }
    }
    if coords.is_empty() {
        return Err(NcasError::Csv {
            path: path.to_path_buf(),
            line: 0,
            message: "no points".into(),
        });
    }
    PointSet::new(2, coords, with_labels.unwrap_or(false).then_some(labels))
}

fn csv_error(path: &Path, e: csv::Error) -> NcasError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => NcasError::io(path, io),
        other => NcasError::Csv {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Writes `x,y,label` rows with a header.
pub fn write_points_csv(points: &PointSet, labels: &[u8], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    check_len(points.len(), labels.len())?;
    if points.dim() != 2 {
        return Err(NcasError::param("only 2-D point sets can be written"));
    }
    ensure_parent(path)?;
    let mut out = String::from("x,y,label\n");
    for (i, l) in labels.iter().enumerate() {
        let p = points.point(i);
        out.push_str(&format!("{},{},{}\n", p[0], p[1], l));
    }
    fs::write(path, out).map_err(|e| NcasError::io(path, e))
}
