//! On-disk dataset layout: `<root>/<class>/<image_id>.png` plus an optional
//! `patients.csv` sidecar mapping `image_id` to `patient_id`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{ClassLabel, ImagingError, RgbImage, SourceImage};

/// Class directory names, indexed by [`ClassLabel::index`].
pub const CLASS_DIRS: [&str; 4] = ["normal", "hp", "ta_lg", "ca"];
pub const PATIENTS_FILE: &str = "patients.csv";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ImagingError + '_ {
    move |source| ImagingError::Io { path: path.display().to_string(), source }
}

/// Loads every PNG under the class directories of `root`, sorted by class
/// then file name. Missing class directories are skipped.
pub fn load_dataset(root: &Path) -> Result<Vec<SourceImage>, ImagingError> {
    let patients = read_patients(&root.join(PATIENTS_FILE))?;
    let mut images = Vec::new();
    for label in ClassLabel::ALL {
        let dir = root.join(label.dir_name());
        if !dir.is_dir() {
            continue;
        }
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .collect();
        files.sort();
        for path in files {
            let image_id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let raster = read_png(&path)?;
            let mut img = SourceImage::new(raster, label, image_id);
            if let Some(p) = patients.get(&img.image_id) {
                img.patient_id = p.clone();
            }
            images.push(img);
        }
    }
    if images.is_empty() {
        return Err(ImagingError::EmptyDataset(root.display().to_string()));
    }
    Ok(images)
}

fn read_png(path: &Path) -> Result<RgbImage, ImagingError> {
    let decoded = image::open(path)
        .map_err(|e| ImagingError::Decode { path: path.display().to_string(), message: e.to_string() })?
        .into_rgb8();
    let (w, h) = decoded.dimensions();
    RgbImage::from_raw(w as usize, h as usize, decoded.into_raw())
}

fn read_patients(path: &Path) -> Result<HashMap<String, String>, ImagingError> {
    let mut map = HashMap::new();
    if !path.is_file() {
        return Ok(map);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("image_id")) {
            continue;
        }
        let (img, patient) = line.split_once(',').ok_or_else(|| ImagingError::PatientsFile {
            path: path.display().to_string(),
            line: i + 1,
            message: "expected `image_id,patient_id`".into(),
        })?;
        map.insert(img.trim().to_string(), patient.trim().to_string());
    }
    Ok(map)
}

/// Writes images in the dataset layout and a `patients.csv` sidecar.
pub fn write_dataset(root: &Path, images: &[SourceImage]) -> Result<(), ImagingError> {
    let mut csv = String::from("image_id,patient_id\n");
    for img in images {
        let dir = root.join(img.label.dir_name());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(format!("{}.png", img.image_id));
        let buf = image::RgbImage::from_raw(
            img.raster.width() as u32,
            img.raster.height() as u32,
            img.raster.as_raw().to_vec(),
        )
        .expect("raster length invariant");
        buf.save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| ImagingError::Encode { path: path.display().to_string(), message: e.to_string() })?;
        csv.push_str(&format!("{},{}\n", img.image_id, img.patient_id));
    }
    let path = root.join(PATIENTS_FILE);
    fs::write(&path, csv).map_err(io_err(&path))
}
