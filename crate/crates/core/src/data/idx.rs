//! Big-endian IDX containers (the MNIST distribution format).

use std::fs;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::net::{Matrix, Shape};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::TruncatedFile(format!("{} needs {} more bytes", self.what, n)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

fn expect_magic(r: &mut Reader<'_>, expected: u32) -> Result<()> {
    let found = r.u32()?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

/// Parses IDX image and label bytes into an `N×1×rows×cols` dataset with
/// pixels scaled to [0, 1]. Keeps at most `limit` samples.
pub fn parse_idx(images: &[u8], labels: &[u8], limit: usize) -> Result<Dataset> {
    let mut ri = Reader {
        bytes: images,
        pos: 0,
        what: "image file",
    };
    expect_magic(&mut ri, IMAGES_MAGIC)?;
    let n_img = ri.u32()? as usize;
    let rows = ri.u32()? as usize;
    let cols = ri.u32()? as usize;

    let mut rl = Reader {
        bytes: labels,
        pos: 0,
        what: "label file",
    };
    expect_magic(&mut rl, LABELS_MAGIC)?;
    let n_lab = rl.u32()? as usize;
    if n_img != n_lab {
        return Err(Error::CountMismatch {
            images: n_img,
            labels: n_lab,
        });
    }

    let n = n_img.min(limit);
    let pixels = rows * cols;
    let raw = ri.take(n_img * pixels)?;
    let lab = rl.take(n_lab)?;
    let data: Vec<f64> = raw[..n * pixels]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    let labels: Vec<usize> = lab[..n].iter().map(|&b| usize::from(b)).collect();
    let classes = labels.iter().max().map_or(1, |&m| m + 1);
    Dataset::classification(
        Shape::Image {
            channels: 1,
            height: rows,
            width: cols,
        },
        Matrix::from_vec(n, pixels, data)?,
        labels,
        classes,
    )
}

/// Reads an IDX image/label file pair from disk.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    limit: usize,
) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images = fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let labels = fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    parse_idx(&images, &labels, limit)
}

/// Encodes a single-channel image dataset as IDX image and label bytes.
///
/// Pixels are rounded to the nearest multiple of 1/255; datasets produced by
/// [`parse_idx`] therefore round-trip exactly.
pub fn encode_idx(data: &Dataset) -> Result<(Vec<u8>, Vec<u8>)> {
    let Shape::Image {
        channels: 1,
        height,
        width,
    } = data.input_shape()
    else {
        return Err(Error::InvalidParams(
            "IDX export needs 1-channel images".into(),
        ));
    };
    let labels = data
        .labels()
        .ok_or_else(|| Error::InvalidParams("IDX export needs class labels".into()))?;
    if labels.iter().any(|&l| l > 255) {
        return Err(Error::InvalidParams("IDX labels must fit in a byte".into()));
    }
    let n = data.len() as u32;
    let mut img = Vec::with_capacity(16 + data.features().as_slice().len());
    for v in [IMAGES_MAGIC, n, height as u32, width as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    for &v in data.features().as_slice() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParams(format!("pixel {v} outside [0, 1]")));
        }
        img.push((v * 255.0).round() as u8);
    }
    let mut lab = Vec::with_capacity(8 + labels.len());
    for v in [LABELS_MAGIC, n] {
        lab.extend_from_slice(&v.to_be_bytes());
    }
    lab.extend(labels.iter().map(|&l| l as u8));
    Ok((img, lab))
}

pub fn write_idx(
    data: &Dataset,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let (img, lab) = encode_idx(data)?;
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    fs::write(ip, img).map_err(|e| Error::io(ip, e))?;
    fs::write(lp, lab).map_err(|e| Error::io(lp, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_images() -> (Vec<u8>, Vec<u8>) {
        // magic 0x00000803, N=2, rows=2, cols=2, then 8 pixel bytes
        let images = vec![
            0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, //
            0, 255, 51, 102, //
            204, 153, 0, 255,
        ];
        // magic 0x00000801, N=2, labels 7 and 3
        let labels = vec![0, 0, 8, 1, 0, 0, 0, 2, 7, 3];
        (images, labels)
    }

    #[test]
    fn parses_hand_written_bytes() {
        let (img, lab) = two_images();
        let d = parse_idx(&img, &lab, usize::MAX).unwrap();
        assert_eq!(
            d.input_shape(),
            Shape::Image {
                channels: 1,
                height: 2,
                width: 2
            }
        );
        assert_eq!(d.features().row(0), &[0.0, 1.0, 0.2, 0.4]);
        assert_eq!(d.features().row(1), &[0.8, 0.6, 0.0, 1.0]);
        assert_eq!(d.labels().unwrap(), &[7, 3]);
    }

    #[test]
    fn errors() {
        let (mut img, lab) = two_images();
        img[3] = 2;
        assert!(matches!(
            parse_idx(&img, &lab, 10),
            Err(Error::BadMagic { found: 0x0802, .. })
        ));
        let (img, lab) = two_images();
        assert!(matches!(
            parse_idx(&img[..20], &lab, 10),
            Err(Error::TruncatedFile(_))
        ));
        let mut short = lab.clone();
        short[7] = 3;
        assert!(matches!(
            parse_idx(&img, &short, 10),
            Err(Error::CountMismatch {
                images: 2,
                labels: 3
            })
        ));
    }

    #[test]
    fn limit_truncates() {
        let (img, lab) = two_images();
        assert_eq!(parse_idx(&img, &lab, 1).unwrap().len(), 1);
        let empty = parse_idx(&img, &lab, 0).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn encode_round_trips() {
        let (img, lab) = two_images();
        let d = parse_idx(&img, &lab, usize::MAX).unwrap();
        let (img2, lab2) = encode_idx(&d).unwrap();
        assert_eq!((img2, lab2), (img, lab));
    }
}
