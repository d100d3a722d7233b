//! Seeded synthetic sequences with exact ground truth.
//!
//! Objects are solid shapes moving at constant integer velocity. While an
//! object is hidden it keeps moving but produces no pixels, which yields clean
//! occlusion gaps. Objects with a higher `depth` are drawn in front. Flow is
//! exact on visible object pixels and zero elsewhere, so ideal detections are
//! tracked perfectly frame to frame.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{write_detections, write_flo, write_mots, write_ppm, SequenceDir};
use crate::mask::BinaryMask;
use crate::model::{ClassId, Detection, FrameIdx, SequenceMeta, TrackId, TrackedMask, Tracklet};
use crate::oracles::GtIndex;
use crate::raster::{FlowField, RgbImage};
use crate::similarity::{FeatureSource, FeatureTable, Heatmap, HeatmapProvider, HeatmapStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Rect,
    Ellipse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub id: TrackId,
    pub class_id: ClassId,
    pub shape: Shape,
    pub width: u32,
    pub height: u32,
    /// Top-left corner at frame 0.
    pub x0: i64,
    pub y0: i64,
    /// Pixels per frame.
    pub vx: i64,
    pub vy: i64,
    pub appear: FrameIdx,
    /// Exclusive.
    pub vanish: FrameIdx,
    /// Half-open frame spans during which the object is fully occluded.
    pub hidden: Vec<(FrameIdx, FrameIdx)>,
    pub depth: i32,
    pub color: [u8; 3],
    pub score: f64,
}

impl ObjectSpec {
    pub fn corner(&self, frame: FrameIdx) -> (i64, i64) {
        (self.x0 + self.vx * frame as i64, self.y0 + self.vy * frame as i64)
    }

    pub fn present(&self, frame: FrameIdx) -> bool {
        (self.appear..self.vanish).contains(&frame)
            && !self.hidden.iter().any(|&(a, b)| (a..b).contains(&frame))
    }

    fn mask(&self, w: u32, h: u32, frame: FrameIdx) -> BinaryMask {
        let (x, y) = self.corner(frame);
        match self.shape {
            Shape::Rect => BinaryMask::rect(w, h, x, y, self.width, self.height),
            Shape::Ellipse => {
                let (rx, ry) = (self.width as f64 / 2.0, self.height as f64 / 2.0);
                let (cx, cy) = (x as f64 + rx, y as f64 + ry);
                BinaryMask::from_fn(w, h, |px, py| {
                    let dx = (px as f64 + 0.5 - cx) / rx;
                    let dy = (py as f64 + 0.5 - cy) / ry;
                    dx * dx + dy * dy <= 1.0
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Probability of dropping each true detection.
    pub miss_rate: f64,
    /// Probability of one false positive per frame.
    pub fp_rate: f64,
    /// Scores are lowered by up to this much.
    pub score_jitter: f64,
    /// Boundary pixels removed from every detected mask.
    pub erosion: u32,
    /// Uniform noise added to flow vectors, in pixels.
    pub flow_noise: f32,
    /// Uniform noise added to background intensities.
    pub image_noise: u8,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            miss_rate: 0.0,
            fp_rate: 0.0,
            score_jitter: 0.0,
            erosion: 0,
            flow_noise: 0.0,
            image_noise: 0,
        }
    }

    pub fn moderate() -> Self {
        NoiseSpec {
            miss_rate: 0.05,
            fp_rate: 0.3,
            score_jitter: 0.04,
            erosion: 1,
            flow_noise: 0.4,
            image_noise: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub frame_count: u32,
    pub objects: Vec<ObjectSpec>,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Rejects duplicate ids, spans outside the sequence and objects that
    /// leave the image while present.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(format!("{}: {m}", self.name)));
        SequenceMeta::new(&self.name, self.width, self.height, self.fps, self.frame_count)?;
        let mut ids: Vec<TrackId> = self.objects.iter().map(|o| o.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("object ids must be unique".into());
        }
        for o in &self.objects {
            if o.width == 0 || o.height == 0 {
                return bad(format!("object {} has zero size", o.id));
            }
            if o.appear >= o.vanish || o.vanish > self.frame_count {
                return bad(format!("object {} has an invalid lifetime", o.id));
            }
            if !(0.0..=1.0).contains(&o.score) {
                return bad(format!("object {} score outside [0, 1]", o.id));
            }
            for &(a, b) in &o.hidden {
                if a >= b || a < o.appear || b > o.vanish {
                    return bad(format!("object {} has an invalid hidden span {a}..{b}", o.id));
                }
            }
            for f in (o.appear..o.vanish).filter(|&f| o.present(f)) {
                let (x, y) = o.corner(f);
                if x < 0
                    || y < 0
                    || x + o.width as i64 > self.width as i64
                    || y + o.height as i64 > self.height as i64
                {
                    return bad(format!("object {} leaves the image at frame {f}", o.id));
                }
            }
        }
        let n = &self.noise;
        if !(0.0..=1.0).contains(&n.miss_rate) || !(0.0..=1.0).contains(&n.fp_rate) {
            return bad("noise rates must lie in [0, 1]".into());
        }
        if !(n.flow_noise >= 0.0 && n.score_jitter >= 0.0) {
            return bad("noise amplitudes must be non-negative".into());
        }
        Ok(())
    }

    pub fn meta(&self) -> SequenceMeta {
        SequenceMeta {
            sequence_id: self.name.clone(),
            width: self.width,
            height: self.height,
            fps: self.fps,
            frame_count: self.frame_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub meta: SequenceMeta,
    pub gt: Vec<TrackedMask>,
    pub detections: Vec<Detection>,
    /// Flow from frame `t` to `t + 1`, for every `t` but the last.
    pub flows: BTreeMap<FrameIdx, FlowField>,
    pub images: BTreeMap<FrameIdx, RgbImage>,
}

const BACKGROUND: [u8; 3] = [40, 40, 40];
const FP_SCORE: (f64, f64) = (0.5, 0.85);

pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = &spec.noise;
    let mut order: Vec<&ObjectSpec> = spec.objects.iter().collect();
    // front to back; ties broken by id
    order.sort_by_key(|o| (-o.depth, o.id));

    let mut out = Scenario {
        meta: spec.meta(),
        gt: Vec::new(),
        detections: Vec::new(),
        flows: BTreeMap::new(),
        images: BTreeMap::new(),
    };

    for f in 0..spec.frame_count {
        let mut covered = BinaryMask::empty(w, h);
        let mut visible: Vec<(&ObjectSpec, BinaryMask)> = Vec::new();
        for o in order.iter().filter(|o| o.present(f)) {
            let full = o.mask(w, h, f);
            let vis = full.minus(&covered)?;
            covered = covered.union(&full)?;
            if !vis.is_empty() {
                visible.push((o, vis));
            }
        }

        let mut img = RgbImage::filled(w, h, BACKGROUND);
        if noise.image_noise > 0 {
            let a = noise.image_noise as i16;
            for y in 0..h {
                for x in 0..w {
                    let d = rng.gen_range(-a..=a);
                    let c = BACKGROUND.map(|v| (v as i16 + d).clamp(0, 255) as u8);
                    img.put_pixel(x, y, c);
                }
            }
        }
        for (o, vis) in &visible {
            for (x, y) in vis.pixels() {
                img.put_pixel(x, y, o.color);
            }
        }
        out.images.insert(f, img);

        if f + 1 < spec.frame_count {
            let mut flow = FlowField::zeros(w, h);
            for (o, vis) in &visible {
                for (x, y) in vis.pixels() {
                    let mut uv = [o.vx as f32, o.vy as f32];
                    if noise.flow_noise > 0.0 {
                        for c in &mut uv {
                            *c += rng.gen_range(-noise.flow_noise..=noise.flow_noise);
                        }
                    }
                    flow.set(x, y, uv);
                }
            }
            out.flows.insert(f, flow);
        }

        let mut occupied = covered.clone();
        let mut frame_dets = Vec::new();
        for (o, vis) in &visible {
            out.gt.push(TrackedMask { frame: f, track_id: o.id, class_id: o.class_id, mask: vis.clone() });
            let missed = rng.gen_bool(noise.miss_rate);
            let jitter = if noise.score_jitter > 0.0 { rng.gen_range(0.0..noise.score_jitter) } else { 0.0 };
            let mask = vis.erode(noise.erosion);
            if !missed && !mask.is_empty() {
                frame_dets.push(Detection::new(f, o.class_id, (o.score - jitter).max(0.0), mask));
            }
        }
        if rng.gen_bool(noise.fp_rate) {
            let bw = rng.gen_range(10..=16u32).min(w);
            let bh = rng.gen_range(10..=16u32).min(h);
            let class_id = rng.gen_range(1..=2);
            let score = rng.gen_range(FP_SCORE.0..FP_SCORE.1);
            for _ in 0..20 {
                let x = rng.gen_range(0..=(w - bw)) as i64;
                let y = rng.gen_range(0..=(h - bh)) as i64;
                let m = BinaryMask::rect(w, h, x, y, bw, bh);
                if m.is_disjoint(&occupied)? {
                    occupied = occupied.union(&m)?;
                    frame_dets.push(Detection::new(f, class_id, score, m));
                    break;
                }
            }
        }
        out.detections.extend(frame_dets);
    }
    Ok(out)
}

/// Seeded lane scenario: four objects in separate horizontal lanes, at least
/// one of which is hidden for 0.3 to 1.4 s mid-sequence.
pub fn benchmark_spec(seed: u64, noisy: bool) -> ScenarioSpec {
    const W: u32 = 240;
    const H: u32 = 160;
    const FRAMES: u32 = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_1a2e);
    let palette = [[220, 60, 60], [60, 200, 80], [70, 90, 230], [230, 200, 50]];
    let mut objects = Vec::new();
    for lane in 0..4u32 {
        let width = rng.gen_range(16..=26u32);
        let height = rng.gen_range(14..=22u32);
        let speed = rng.gen_range(1..=2i64);
        let vx = if rng.gen_bool(0.5) { speed } else { -speed };
        let travel = speed * (FRAMES as i64 - 1);
        let span = W as i64 - 4 - width as i64 - travel;
        let start = 2 + rng.gen_range(0..=span);
        let x0 = if vx > 0 { start } else { start + travel };
        let hidden = if lane == 0 || rng.gen_bool(0.5) {
            let gap = rng.gen_range(3..=14u32);
            let s = rng.gen_range(6..=(FRAMES - gap - 6));
            vec![(s, s + gap)]
        } else {
            Vec::new()
        };
        objects.push(ObjectSpec {
            id: lane + 1,
            class_id: rng.gen_range(1..=2),
            shape: if rng.gen_bool(0.5) { Shape::Rect } else { Shape::Ellipse },
            width,
            height,
            x0,
            y0: 20 + 34 * lane as i64 + rng.gen_range(0..=(24 - height as i64)),
            vx,
            vy: 0,
            appear: 0,
            vanish: FRAMES,
            hidden,
            depth: 0,
            color: palette[lane as usize],
            score: 0.95,
        });
    }
    ScenarioSpec {
        name: format!("{}-{seed}", if noisy { "noisy" } else { "lanes" }),
        width: W,
        height: H,
        fps: 10.0,
        frame_count: FRAMES,
        objects,
        noise: if noisy { NoiseSpec::moderate() } else { NoiseSpec::none() },
        seed,
    }
}

/// One rectangle moving at `vx` pixels per frame and hidden for `hidden`
/// frames from frame 8 on, in a 240x160 sequence at 10 fps.
pub fn single_gap_spec(vx: i64, hidden: u32, seed: u64) -> ScenarioSpec {
    let frames = 8 + hidden + 10;
    ScenarioSpec {
        name: format!("gap-v{vx}-h{hidden}"),
        width: 240,
        height: 160,
        fps: 10.0,
        frame_count: frames,
        objects: vec![ObjectSpec {
            id: 1,
            class_id: 1,
            shape: Shape::Rect,
            width: 16,
            height: 16,
            x0: 2,
            y0: 70,
            vx,
            vy: 0,
            appear: 0,
            vanish: frames,
            hidden: vec![(8, 8 + hidden)],
            depth: 0,
            color: [200, 80, 80],
            score: 0.95,
        }],
        noise: NoiseSpec::none(),
        seed,
    }
}

/// Named scenario presets for the command line.
pub fn preset(name: &str, seed: u64) -> Result<ScenarioSpec> {
    match name {
        "lanes" => Ok(benchmark_spec(seed, false)),
        "noisy" => Ok(benchmark_spec(seed, true)),
        // 2.0 s between the last and first visible frame
        "gap2s" => Ok(single_gap_spec(1, 19, seed)),
        // 42 px jump over 6 frames: 0.21 of (W + H) / 2
        "jump" => Ok(single_gap_spec(7, 5, seed)),
        _ => Err(Error::InvalidScenario(format!(
            "unknown preset '{name}' (expected lanes, noisy, gap2s or jump)"
        ))),
    }
}

fn anchor_identity(gt: &GtIndex, reference: &Tracklet, anchors: &[FrameIdx]) -> Option<TrackId> {
    let dets = anchors
        .iter()
        .filter_map(|&f| reference.detection_at(f).cloned())
        .collect();
    gt.tracklet_identity(&Tracklet { id: reference.id, class_id: reference.class_id, detections: dets })
}

/// Perfect memory propagation: the reference's ground-truth identity, read at
/// its anchors, is painted into the query frame.
pub struct IdealHeatmaps<'a> {
    pub gt: &'a GtIndex,
    pub width: u32,
    pub height: u32,
    /// Box blur radius applied to the painted mask.
    pub blur: u32,
}

impl HeatmapProvider for IdealHeatmaps<'_> {
    fn heatmap(&self, reference: &Tracklet, anchors: &[FrameIdx], query: FrameIdx) -> Option<Cow<'_, Heatmap>> {
        let map = anchor_identity(self.gt, reference, anchors)
            .and_then(|id| self.gt.mask_of(id, query))
            .map(Heatmap::from_mask)
            .unwrap_or_else(|| Heatmap::zeros(self.width, self.height));
        Some(Cow::Owned(if self.blur > 0 { map.box_blur(self.blur) } else { map }))
    }
}

/// Identity embeddings: one random unit vector per ground-truth object, and a
/// vector unique to the tracklet for detections with no identity.
pub struct IdealFeatures<'a> {
    pub gt: &'a GtIndex,
    pub dim: usize,
    pub seed: u64,
}

impl IdealFeatures<'_> {
    fn vector(&self, key: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ key.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let v: Vec<f32> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt().max(f32::MIN_POSITIVE);
        v.into_iter().map(|x| x / norm).collect()
    }
}

impl FeatureSource for IdealFeatures<'_> {
    fn feature(&self, tracklet: &Tracklet, frame: FrameIdx) -> Option<Cow<'_, [f32]>> {
        let det = tracklet.detection_at(frame)?;
        let key = match self.gt.best_match(frame, &det.mask) {
            Some((id, _)) => id as u64,
            None => (1 << 32) | tracklet.id as u64,
        };
        Some(Cow::Owned(self.vector(key)))
    }
}

/// Materialises the heatmaps for `requests`.
pub fn export_heatmaps(
    provider: &dyn HeatmapProvider,
    tracklets: &[Tracklet],
    requests: &[crate::similarity::HeatmapRequest],
    width: u32,
    height: u32,
) -> HeatmapStore {
    let by_id: BTreeMap<TrackId, &Tracklet> = tracklets.iter().map(|t| (t.id, t)).collect();
    let mut store = HeatmapStore { width, height, ..Default::default() };
    for r in requests {
        if let Some(h) = provider.heatmap(by_id[&r.ref_id], &r.anchors, r.query) {
            store.maps.insert(r.key(), h.into_owned());
        }
    }
    store
}

/// Embeddings for every detection of every tracklet.
pub fn export_features(source: &dyn FeatureSource, tracklets: &[Tracklet]) -> FeatureTable {
    let mut table = FeatureTable::default();
    for t in tracklets {
        for f in t.frames() {
            if let Some(v) = source.feature(t, f) {
                table.dim = v.len();
                table.rows.insert((t.id, f), v.into_owned());
            }
        }
    }
    table
}

/// Writes the scenario as a sequence directory. Images are optional since
/// only the colour backends read them.
pub fn write_scenario(dir: &SequenceDir, scenario: &Scenario, images: bool) -> Result<()> {
    dir.write_meta(&scenario.meta)?;
    write_detections(&dir.detections_path(), &scenario.detections)?;
    write_mots(&dir.gt_path(), &scenario.gt)?;
    for (&f, flow) in &scenario.flows {
        write_flo(&dir.flow_path(f), flow)?;
    }
    if images {
        for (&f, img) in &scenario.images {
            write_ppm(&dir.image_path(f), img)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::check_disjoint;

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&benchmark_spec(3, true)).unwrap();
        let b = generate(&benchmark_spec(3, true)).unwrap();
        assert_eq!(a, b);
        let c = generate(&benchmark_spec(4, true)).unwrap();
        assert_ne!(a.detections, c.detections);
    }

    #[test]
    fn ideal_detections_equal_ground_truth() {
        let s = generate(&benchmark_spec(1, false)).unwrap();
        assert_eq!(s.detections.len(), s.gt.len());
        for (d, g) in s.detections.iter().zip(&s.gt) {
            assert_eq!((d.frame, &d.mask), (g.frame, &g.mask));
        }
        check_disjoint(&s.gt).unwrap();
        assert_eq!(s.flows.len(), 39);
    }

    #[test]
    fn benchmark_gaps_are_short() {
        for seed in 0..20 {
            let spec = benchmark_spec(seed, false);
            spec.validate().unwrap();
            assert!(!spec.objects[0].hidden.is_empty());
            for o in &spec.objects {
                for &(a, b) in &o.hidden {
                    assert!((b - a) as f64 / spec.fps < 1.5);
                    assert!(a >= 2 && b + 2 <= spec.frame_count);
                }
            }
        }
    }

    #[test]
    fn hidden_frames_have_no_pixels() {
        let s = generate(&single_gap_spec(2, 5, 0)).unwrap();
        let frames: Vec<u32> = s.gt.iter().map(|r| r.frame).collect();
        assert!(!frames.iter().any(|f| (8..13).contains(f)));
        assert_eq!(frames.len(), s.meta.frame_count as usize - 5);
    }

    #[test]
    fn front_object_occludes_back_object() {
        let mut spec = single_gap_spec(0, 1, 0);
        spec.objects[0].hidden.clear();
        let mut front = spec.objects[0].clone();
        front.id = 2;
        front.x0 += 8;
        front.depth = 1;
        spec.objects.push(front);
        let s = generate(&spec).unwrap();
        let back = s.gt.iter().find(|r| r.track_id == 1).unwrap();
        assert_eq!(back.mask.area(), 8 * 16);
        check_disjoint(&s.gt).unwrap();
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = single_gap_spec(7, 5, 0);
        spec.frame_count += 20;
        spec.objects[0].vanish = spec.frame_count;
        assert!(matches!(generate(&spec), Err(Error::InvalidScenario(_))));
        let mut spec = single_gap_spec(1, 2, 0);
        spec.objects.push(spec.objects[0].clone());
        assert!(spec.validate().is_err());
        assert!(preset("nope", 0).is_err());
    }

    #[test]
    fn preset_geometry() {
        let gap = preset("gap2s", 0).unwrap();
        let (a, b) = gap.objects[0].hidden[0];
        // last visible a - 1, first visible b
        assert_eq!((b - (a - 1)) as f64 / gap.fps, 2.0);
        let jump = preset("jump", 0).unwrap();
        let (a, b) = jump.objects[0].hidden[0];
        assert_eq!((b - (a - 1)) as i64 * jump.objects[0].vx, 42);
        jump.validate().unwrap();
    }

    #[test]
    fn ideal_heatmap_paints_identity() {
        let s = generate(&single_gap_spec(1, 3, 0)).unwrap();
        let gt = GtIndex::new(&s.gt);
        let t = Tracklet {
            id: 1,
            class_id: 1,
            detections: s.detections.iter().filter(|d| d.frame < 8).cloned().collect(),
        };
        let p = IdealHeatmaps { gt: &gt, width: 240, height: 160, blur: 0 };
        let h = p.heatmap(&t, &[7, 3], 12).unwrap();
        assert_eq!(*h, Heatmap::from_mask(gt.mask_of(1, 12).unwrap()));
        assert!(p.heatmap(&t, &[7], 9).unwrap().values().iter().all(|&v| v == 0.0));
    }
}
