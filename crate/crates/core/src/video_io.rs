//! Video ingestion: YUV4MPEG2 streams and directories of PGM/PNG frames,
//! normalized to single-channel intensity frames in `[0, 1]`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameSequence};

/// Frame rate assumed when a source carries none.
pub const DEFAULT_FPS: f64 = 30.0;

const Y4M_MAGIC: &[u8] = b"YUV4MPEG2";
const MAX_HEADER_LEN: usize = 4096;

/// BT.601 luma.
#[inline]
pub fn to_grayscale(r: f32, g: f32, b: f32) -> f32 {
    0.299 * r + 0.587 * g + 0.114 * b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chroma {
    C420,
    C422,
    C444,
    Mono,
}

impl Chroma {
    fn parse(tag: &str) -> Option<Self> {
        match tag {
            "420" | "420jpeg" | "420paldv" | "420mpeg2" => Some(Chroma::C420),
            "422" => Some(Chroma::C422),
            "444" => Some(Chroma::C444),
            "mono" => Some(Chroma::Mono),
            _ => None,
        }
    }

    fn chroma_bytes(self, width: usize, height: usize) -> usize {
        let (cw, ch) = match self {
            Chroma::C420 => (width.div_ceil(2), height.div_ceil(2)),
            Chroma::C422 => (width.div_ceil(2), height),
            Chroma::C444 => (width, height),
            Chroma::Mono => return 0,
        };
        2 * cw * ch
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Y4mHeader {
    pub width: usize,
    pub height: usize,
    pub fps_num: u32,
    pub fps_den: u32,
    pub chroma: Chroma,
}

impl Y4mHeader {
    pub fn fps(&self) -> f64 {
        self.fps_num as f64 / self.fps_den as f64
    }
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Parses the stream header line (without its trailing newline).
fn parse_y4m_header(line: &[u8]) -> Result<Y4mHeader> {
    if !line.starts_with(Y4M_MAGIC) {
        return Err(format_err(0, "missing YUV4MPEG2 signature"));
    }
    let text = std::str::from_utf8(line).map_err(|e| format_err(e.valid_up_to(), "non-ASCII header"))?;

    let mut width = None;
    let mut height = None;
    let mut rate = None;
    let mut chroma = Chroma::C420;

    let mut offset = Y4M_MAGIC.len();
    for token in text[Y4M_MAGIC.len()..].split(' ') {
        let start = offset;
        offset += token.len() + 1;
        if token.is_empty() {
            continue;
        }
        let (tag, value) = token.split_at(1);
        match tag {
            "W" => {
                width = Some(
                    value
                        .parse::<usize>()
                        .ok()
                        .filter(|&w| w > 0)
                        .ok_or_else(|| format_err(start, format!("bad width {value:?}")))?,
                )
            }
            "H" => {
                height = Some(
                    value
                        .parse::<usize>()
                        .ok()
                        .filter(|&h| h > 0)
                        .ok_or_else(|| format_err(start, format!("bad height {value:?}")))?,
                )
            }
            "F" => {
                let parsed = value.split_once(':').and_then(|(n, d)| {
                    let n = n.parse::<u32>().ok()?;
                    let d = d.parse::<u32>().ok()?;
                    (n > 0 && d > 0).then_some((n, d))
                });
                rate = Some(parsed.ok_or_else(|| format_err(start, format!("bad frame rate {value:?}")))?);
            }
            "C" => {
                chroma = Chroma::parse(value)
                    .ok_or_else(|| format_err(start, format!("unsupported color space {value:?}")))?;
            }
            // interlacing, aspect, extensions: irrelevant to luma extraction
            "I" | "A" | "X" => {}
            _ => return Err(format_err(start, format!("unknown header tag {token:?}"))),
        }
    }

    let width = width.ok_or_else(|| format_err(line.len(), "header has no W tag"))?;
    let height = height.ok_or_else(|| format_err(line.len(), "header has no H tag"))?;
    let (fps_num, fps_den) = rate.unwrap_or_else(|| {
        log::warn!("Y4M header carries no frame rate, assuming {DEFAULT_FPS} fps");
        (DEFAULT_FPS as u32, 1)
    });
    Ok(Y4mHeader {
        width,
        height,
        fps_num,
        fps_den,
        chroma,
    })
}

/// Reads one `\n`-terminated line of at most `MAX_HEADER_LEN` bytes.
/// Returns `Ok(None)` on a clean EOF before any byte.
fn read_line<R: BufRead>(reader: &mut R) -> io::Result<Option<(Vec<u8>, bool)>> {
    let mut buf = Vec::new();
    let n = reader
        .by_ref()
        .take(MAX_HEADER_LEN as u64)
        .read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    let terminated = buf.last() == Some(&b'\n');
    if terminated {
        buf.pop();
    }
    Ok(Some((buf, terminated)))
}

/// Streaming YUV4MPEG2 reader yielding the luma plane of each frame.
pub struct Y4mReader<R> {
    reader: R,
    header: Y4mHeader,
    offset: u64,
    frame_index: usize,
    payload: Vec<u8>,
    done: bool,
}

impl<R: BufRead> Y4mReader<R> {
    pub fn new(mut reader: R) -> Result<Self> {
        let io_err = |e| Error::io("<y4m stream>", e);
        let (line, terminated) = read_line(&mut reader)
            .map_err(io_err)?
            .ok_or_else(|| format_err(0, "empty stream"))?;
        if !terminated {
            return Err(format_err(line.len(), "unterminated stream header"));
        }
        let header = parse_y4m_header(&line)?;
        let offset = line.len() as u64 + 1;
        Ok(Self {
            reader,
            header,
            offset,
            frame_index: 0,
            payload: Vec::new(),
            done: false,
        })
    }

    pub fn header(&self) -> &Y4mHeader {
        &self.header
    }

    fn read_frame(&mut self) -> Result<Option<Frame>> {
        let frame = self.frame_index;
        let line = read_line(&mut self.reader).map_err(|e| Error::io("<y4m stream>", e))?;
        let Some((line, terminated)) = line else {
            return Ok(None);
        };
        if !line.starts_with(b"FRAME") {
            if b"FRAME".starts_with(&line) && !terminated {
                return Err(Error::Truncated { frame });
            }
            return Err(format_err(self.offset as usize, "expected FRAME marker"));
        }
        if !terminated {
            return Err(Error::Truncated { frame });
        }
        if line.len() > 5 && line[5] != b' ' {
            return Err(format_err(self.offset as usize, "malformed FRAME marker"));
        }
        self.offset += line.len() as u64 + 1;

        let (w, h) = (self.header.width, self.header.height);
        let luma = w * h;
        let total = luma + self.header.chroma.chroma_bytes(w, h);
        self.payload.resize(total, 0);
        read_exact_or_truncated(&mut self.reader, &mut self.payload, frame)?;
        self.offset += total as u64;
        self.frame_index += 1;
        Frame::from_u8(w, h, &self.payload[..luma]).map(Some)
    }
}

fn read_exact_or_truncated<R: Read>(reader: &mut R, buf: &mut [u8], frame: usize) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => return Err(Error::Truncated { frame }),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::io("<y4m stream>", e)),
        }
    }
    Ok(())
}

impl<R: BufRead> Iterator for Y4mReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_frame() {
            Ok(Some(frame)) => Some(Ok(frame)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub fn open_y4m(path: &Path) -> Result<Y4mReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Y4mReader::new(BufReader::new(file))
}

/// Loads every frame of a Y4M file into memory.
pub fn load_y4m(path: &Path) -> Result<FrameSequence> {
    let reader = open_y4m(path)?;
    let fps = reader.header().fps();
    let frames = reader.collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, fps)
}

/// Writes frames as a `C420jpeg` Y4M stream with neutral chroma.
pub fn write_y4m<'a, W: Write>(
    out: W,
    frames: impl IntoIterator<Item = &'a Frame>,
    width: usize,
    height: usize,
    fps_num: u32,
    fps_den: u32,
) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "YUV4MPEG2 W{width} H{height} F{fps_num}:{fps_den} Ip A1:1 C420jpeg")?;
    let chroma = vec![128u8; Chroma::C420.chroma_bytes(width, height)];
    for frame in frames {
        if frame.dims() != (width, height) {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "frame dimensions differ from header"));
        }
        out.write_all(b"FRAME\n")?;
        out.write_all(&frame.to_u8())?;
        out.write_all(&chroma)?;
    }
    out.flush()
}

/// Expresses `fps` as a rational with denominator 1 or 1001.
pub fn fps_to_rational(fps: f64) -> (u32, u32) {
    if (fps - fps.round()).abs() < 1e-9 {
        return (fps.round() as u32, 1);
    }
    let ntsc = fps * 1001.0;
    if (ntsc - ntsc.round()).abs() < 1e-6 {
        return (ntsc.round() as u32, 1001);
    }
    ((fps * 1000.0).round() as u32, 1000)
}

fn skip_pnm_whitespace(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        match bytes.get(pos) {
            Some(b'#') => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            Some(c) if c.is_ascii_whitespace() => pos += 1,
            _ => return pos,
        }
    }
}

fn pnm_number(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    *pos = skip_pnm_whitespace(bytes, *pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format_err(start, "expected a decimal number in PGM header"))
}

/// Decodes a binary `P5` PGM with maxval 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<Frame> {
    if !bytes.starts_with(b"P5") {
        return Err(format_err(0, "not a binary PGM (P5)"));
    }
    let mut pos = 2;
    let width = pnm_number(bytes, &mut pos)?;
    let height = pnm_number(bytes, &mut pos)?;
    let maxval_at = pos;
    let maxval = pnm_number(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(Error::Unsupported(format!(
            "PGM maxval {maxval} at byte {maxval_at}, only 255 is supported"
        )));
    }
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(format_err(pos, "missing whitespace after PGM maxval")),
    }
    let n = width
        .checked_mul(height)
        .filter(|&n| n > 0)
        .ok_or_else(|| format_err(0, "PGM dimensions must be positive"))?;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or(Error::Truncated { frame: 0 })?;
    Frame::from_u8(width, height, raster)
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let (w, h) = frame.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(&frame.to_u8());
    out
}

/// Decodes an 8-bit grayscale or RGB PNG; RGB is reduced with [`to_grayscale`].
pub fn decode_png<R: BufRead + Seek>(reader: R) -> Result<Frame> {
    let png_err = |e: png::DecodingError| Error::Unsupported(format!("PNG: {e}"));
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Unsupported(format!("PNG bit depth {:?}", info.bit_depth)));
    }
    let color = info.color_type;
    if !matches!(color, png::ColorType::Grayscale | png::ColorType::Rgb) {
        return Err(Error::Unsupported(format!("PNG color type {color:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Unsupported("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let out = reader.next_frame(&mut buf).map_err(png_err)?;
    let (w, h) = (out.width as usize, out.height as usize);
    let rows = buf.chunks(out.line_size).take(h);
    let data: Vec<f32> = match color {
        png::ColorType::Grayscale => rows
            .flat_map(|row| row[..w].iter().map(|&v| v as f32 / 255.0))
            .collect(),
        _ => rows
            .flat_map(|row| {
                row[..3 * w].chunks_exact(3).map(|px| {
                    let [r, g, b] = [px[0], px[1], px[2]].map(|v| v as f32 / 255.0);
                    to_grayscale(r, g, b).clamp(0.0, 1.0)
                })
            })
            .collect(),
    };
    Frame::new(w, h, data)
}

/// Decodes a PGM or PNG file, dispatching on its signature.
pub fn load_image(path: &Path) -> Result<Frame> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(io::Cursor::new(bytes))
    } else {
        Err(Error::Unsupported(format!(
            "{}: neither binary PGM nor PNG",
            path.display()
        )))
    }
}

/// Lists files in `dir` whose names match `pattern`, sorted lexicographically.
/// Only `.pgm` and `.png` files are considered.
pub fn list_frame_files(dir: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    let pattern = glob::Pattern::new(pattern)
        .map_err(|e| Error::InvalidConfig(format!("bad filename pattern {pattern:?}: {e}")))?;
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("pgm" | "png")) && pattern.matches(name) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Streams frames from a list of image files, validating uniform dimensions.
pub struct FrameDirReader {
    files: std::vec::IntoIter<PathBuf>,
    dims: Option<(usize, usize)>,
    done: bool,
}

impl FrameDirReader {
    pub fn new(files: Vec<PathBuf>) -> Self {
        Self {
            files: files.into_iter(),
            dims: None,
            done: false,
        }
    }
}

impl Iterator for FrameDirReader {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let path = self.files.next()?;
        let result = load_image(&path).and_then(|frame| {
            let (w, h) = frame.dims();
            match self.dims {
                None => self.dims = Some((w, h)),
                Some((ew, eh)) if (ew, eh) != (w, h) => {
                    return Err(Error::DimensionMismatch {
                        path: path.clone(),
                        expected_w: ew,
                        expected_h: eh,
                        found_w: w,
                        found_h: h,
                    })
                }
                Some(_) => {}
            }
            Ok(frame)
        });
        if result.is_err() {
            self.done = true;
        }
        Some(result)
    }
}

/// Loads a directory of PGM/PNG frames matching `pattern`.
pub fn load_frame_dir(dir: &Path, pattern: &str, fps: f64) -> Result<FrameSequence> {
    let files = list_frame_files(dir, pattern)?;
    if files.len() < 2 {
        return Err(Error::InsufficientInput {
            needed: 2,
            found: files.len(),
        });
    }
    let frames = FrameDirReader::new(files).collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, fps)
}

/// Writes `frames` as `{prefix}NNNNN.pgm` files.
pub fn write_frame_dir<'a>(
    dir: &Path,
    prefix: &str,
    frames: impl IntoIterator<Item = &'a Frame>,
) -> Result<usize> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut n = 0;
    for frame in frames {
        let path = dir.join(format!("{prefix}{n:05}.pgm"));
        std::fs::write(&path, encode_pgm(frame)).map_err(|e| Error::io(&path, e))?;
        n += 1;
    }
    Ok(n)
}

/// A frame stream opened from either a Y4M file or a frame directory.
pub struct VideoStream {
    pub fps: f64,
    pub dims: (usize, usize),
    frames: Box<dyn Iterator<Item = Result<Frame>> + Send>,
}

impl VideoStream {
    pub fn from_frames(frames: impl Iterator<Item = Result<Frame>> + Send + 'static, fps: f64, dims: (usize, usize)) -> Self {
        Self {
            fps,
            dims,
            frames: Box::new(frames),
        }
    }
}

impl Iterator for VideoStream {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.frames.next()
    }
}

/// Opens `path` for streaming. Directories are read as frame sequences
/// matching `pattern`; anything else is parsed as Y4M. `fps` overrides the
/// source rate when given.
pub fn open_video(path: &Path, pattern: &str, fps: Option<f64>) -> Result<VideoStream> {
    if let Some(fps) = fps {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidConfig(format!("fps must be positive, got {fps}")));
        }
    }
    if path.is_dir() {
        let files = list_frame_files(path, pattern)?;
        if files.len() < 2 {
            return Err(Error::InsufficientInput {
                needed: 2,
                found: files.len(),
            });
        }
        let first = load_image(&files[0])?;
        let dims = first.dims();
        Ok(VideoStream::from_frames(
            FrameDirReader::new(files),
            fps.unwrap_or(DEFAULT_FPS),
            dims,
        ))
    } else {
        let reader = open_y4m(path)?;
        let header = reader.header().clone();
        Ok(VideoStream::from_frames(
            reader,
            fps.unwrap_or(header.fps()),
            (header.width, header.height),
        ))
    }
}
