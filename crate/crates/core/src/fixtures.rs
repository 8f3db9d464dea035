//! Bundled multi-DNN workload fixtures.
//!
//! Three workload mixes are provided: two AR/VR-style mixes combining
//! classification, segmentation, hand-pose, and depth models, and an
//! MLPerf-style multi-stream mix. Layer tables are approximate
//! reconstructions of the published model architectures with padding
//! pre-applied to the activation dims; pooling is folded into the next
//! layer's input size, and 1x1 stride-2 shortcut convolutions are modeled
//! as stride-1 point-wise convolutions on the sampled output grid (same
//! MACs and useful traffic).

use crate::workload::{OpKind, RawLayer, RawModel, RawWorkload, Workload};

fn base(name: &str, op: OpKind, k: u64, c: u64) -> RawLayer {
    RawLayer {
        name: Some(name.to_string()),
        op,
        k,
        c,
        y: 1,
        x: 1,
        r: 1,
        s: 1,
        stride: 1,
        upscale: 1,
        depends_on: None,
    }
}

fn deps(mut layer: RawLayer, on: &[&str]) -> RawLayer {
    layer.depends_on = Some(on.iter().map(|s| s.to_string()).collect());
    layer
}

/// Square convolution; chains to the previous layer unless `deps` is set.
fn conv(name: &str, k: u64, c: u64, y: u64, r: u64, stride: u64) -> RawLayer {
    let mut l = base(name, OpKind::Conv2d, k, c);
    l.y = y;
    l.x = y;
    l.r = r;
    l.s = r;
    l.stride = stride;
    l
}

fn pw(name: &str, k: u64, c: u64, size: u64) -> RawLayer {
    let mut l = base(name, OpKind::Pwconv, k, c);
    l.y = size;
    l.x = size;
    l
}

fn dw(name: &str, ch: u64, y: u64, stride: u64) -> RawLayer {
    let mut l = base(name, OpKind::Dwconv, ch, ch);
    l.y = y;
    l.x = y;
    l.r = 3;
    l.s = 3;
    l.stride = stride;
    l
}

fn fc(name: &str, k: u64, c: u64) -> RawLayer {
    base(name, OpKind::Fc, k, c)
}

/// Skip-connection or concatenation: zero MACs, pure traffic.
fn elem(name: &str, ch: u64, size: u64, on: &[&str]) -> RawLayer {
    let mut l = base(name, OpKind::Elemwise, ch, ch);
    l.y = size;
    l.x = size;
    deps(l, on)
}

/// Up-scale (transposed) convolution over a virtually upsampled input.
fn up(name: &str, k: u64, c: u64, y: u64, upscale: u64, r: u64) -> RawLayer {
    let mut l = base(name, OpKind::Trconv, k, c);
    l.y = y;
    l.x = y;
    l.r = r;
    l.s = r;
    l.upscale = upscale;
    l
}

/// Resnet50: bottleneck blocks over four stages plus the classifier.
pub fn resnet50() -> RawModel {
    let mut ls = vec![conv("conv1", 64, 3, 230, 7, 2)]; // -> 112, pooled to 56
    let stages: [(u64, u64, u64, u64, usize, u64); 4] = [
        (64, 64, 256, 56, 3, 1),
        (256, 128, 512, 56, 4, 2),
        (512, 256, 1024, 28, 6, 2),
        (1024, 512, 2048, 14, 3, 2),
    ];
    let mut prev = "conv1".to_string();
    for (si, (in0, mid, out, size0, blocks, stride0)) in stages.into_iter().enumerate() {
        let mut in_ch = in0;
        let mut size = size0;
        for b in 0..blocks {
            let stride = if b == 0 { stride0 } else { 1 };
            let size_out = if stride == 2 { size / 2 } else { size };
            let p = format!("s{}b{}", si + 1, b + 1);
            ls.push(deps(pw(&format!("{p}_pw1"), mid, in_ch, size), &[&prev]));
            ls.push(conv(&format!("{p}_c3"), mid, mid, size + 2, 3, stride));
            ls.push(pw(&format!("{p}_pw2"), out, mid, size_out));
            let shortcut = if b == 0 {
                ls.push(deps(pw(&format!("{p}_down"), out, in_ch, size_out), &[&prev]));
                format!("{p}_down")
            } else {
                prev.clone()
            };
            ls.push(elem(
                &format!("{p}_add"),
                out,
                size_out,
                &[&format!("{p}_pw2"), &shortcut],
            ));
            prev = format!("{p}_add");
            in_ch = out;
            size = size_out;
        }
    }
    ls.push(deps(fc("fc", 1000, 2048), &[&prev]));
    RawModel {
        name: "resnet50".into(),
        batch: 1,
        layer: ls,
    }
}

/// MobileNetV2: inverted residual blocks with depth-wise convolutions.
pub fn mobilenet_v2() -> RawModel {
    let mut ls = vec![conv("conv1", 32, 3, 226, 3, 2)]; // -> 112
    ls.push(dw("b0_dw", 32, 114, 1));
    ls.push(pw("b0_proj", 16, 32, 112));
    let mut prev = "b0_proj".to_string();
    let mut in_ch = 16u64;
    let mut size = 112u64;
    let groups: [(u64, usize, u64); 6] = [
        (24, 2, 2),
        (32, 3, 2),
        (64, 4, 2),
        (96, 3, 1),
        (160, 3, 2),
        (320, 1, 1),
    ];
    let mut bi = 1;
    for (out, blocks, stride0) in groups {
        for b in 0..blocks {
            let stride = if b == 0 { stride0 } else { 1 };
            let size_out = if stride == 2 { size / 2 } else { size };
            let p = format!("b{bi}");
            let hidden = 6 * in_ch;
            ls.push(deps(pw(&format!("{p}_exp"), hidden, in_ch, size), &[&prev]));
            ls.push(dw(&format!("{p}_dw"), hidden, size + 2, stride));
            ls.push(pw(&format!("{p}_proj"), out, hidden, size_out));
            if stride == 1 && in_ch == out {
                ls.push(elem(
                    &format!("{p}_add"),
                    out,
                    size_out,
                    &[&format!("{p}_proj"), &prev],
                ));
                prev = format!("{p}_add");
            } else {
                prev = format!("{p}_proj");
            }
            in_ch = out;
            size = size_out;
            bi += 1;
        }
    }
    ls.push(deps(pw("head", 1280, 320, 7), &[&prev]));
    ls.push(fc("fc", 1000, 1280));
    RawModel {
        name: "mobilenet_v2".into(),
        batch: 1,
        layer: ls,
    }
}

/// UNet with valid convolutions on a 572x572 single-channel input.
pub fn unet() -> RawModel {
    let mut ls = Vec::new();
    // encoder: (channels, input size of first conv)
    let enc: [(u64, u64, u64); 4] = [(64, 1, 572), (128, 64, 284), (256, 128, 140), (512, 256, 68)];
    for (i, (ch, in_ch, size)) in enc.into_iter().enumerate() {
        ls.push(conv(&format!("enc{}a", i + 1), ch, in_ch, size, 3, 1));
        ls.push(conv(&format!("enc{}b", i + 1), ch, ch, size - 2, 3, 1));
    }
    ls.push(conv("bott_a", 1024, 512, 32, 3, 1));
    ls.push(conv("bott_b", 1024, 1024, 30, 3, 1));
    // decoder: up-conv, concat with encoder feature, two convs
    let dec: [(u64, u64, &str); 4] = [
        (512, 28, "enc4b"),
        (256, 51, "enc3b"),
        (128, 97, "enc2b"),
        (64, 189, "enc1b"),
    ];
    for (i, (ch, y_in, skip)) in dec.into_iter().enumerate() {
        let d = 4 - i;
        let y_up = y_in * 2 - 1; // trconv: (2*y - 2)/1 + 1
        ls.push(up(&format!("dec{d}_up"), ch, ch * 2, y_in, 2, 2));
        ls.push(elem(
            &format!("dec{d}_cat"),
            ch * 2,
            y_up,
            &[&format!("dec{d}_up"), skip],
        ));
        ls.push(conv(&format!("dec{d}a"), ch, ch * 2, y_up, 3, 1));
        ls.push(conv(&format!("dec{d}b"), ch, ch, y_up - 2, 3, 1));
    }
    ls.push(pw("out", 2, 64, 373));
    RawModel {
        name: "unet".into(),
        batch: 1,
        layer: ls,
    }
}

/// MobileNetV1 depth-wise separable backbone, parametric in input size.
fn mobilenet_v1_layers(prefix: &str, size0: u64) -> (Vec<RawLayer>, u64, u64) {
    let mut ls = vec![conv(&format!("{prefix}conv1"), 32, 3, size0 + 2, 3, 2)];
    let mut size = size0 / 2;
    let mut in_ch = 32u64;
    let blocks: [(u64, u64); 13] = [
        (64, 1),
        (128, 2),
        (128, 1),
        (256, 2),
        (256, 1),
        (512, 2),
        (512, 1),
        (512, 1),
        (512, 1),
        (512, 1),
        (512, 1),
        (1024, 2),
        (1024, 1),
    ];
    for (i, (out, stride)) in blocks.into_iter().enumerate() {
        let size_out = if stride == 2 { size / 2 } else { size };
        ls.push(dw(&format!("{prefix}ds{}_dw", i + 1), in_ch, size + 2, stride));
        ls.push(pw(&format!("{prefix}ds{}_pw", i + 1), out, in_ch, size_out));
        in_ch = out;
        size = size_out;
    }
    (ls, in_ch, size)
}

pub fn mobilenet_v1() -> RawModel {
    let (mut ls, ch, _) = mobilenet_v1_layers("", 224);
    ls.push(fc("fc", 1000, ch));
    RawModel {
        name: "mobilenet_v1".into(),
        batch: 1,
        layer: ls,
    }
}

/// SSD detector on a truncated Resnet34 backbone (1200x1200 input).
pub fn ssd_resnet34() -> RawModel {
    let mut ls = vec![conv("conv1", 64, 3, 1206, 7, 2)]; // -> 600, pooled to 300
    let mut prev = "conv1".to_string();
    let stages: [(u64, u64, u64, usize, u64); 3] = [
        (64, 64, 300, 3, 1),
        (64, 128, 300, 4, 2),
        (128, 256, 150, 6, 2),
    ];
    for (si, (in0, out, size0, blocks, stride0)) in stages.into_iter().enumerate() {
        let mut in_ch = in0;
        let mut size = size0;
        for b in 0..blocks {
            let stride = if b == 0 { stride0 } else { 1 };
            let size_out = if stride == 2 { size / 2 } else { size };
            let p = format!("s{}b{}", si + 1, b + 1);
            ls.push(deps(
                conv(&format!("{p}_c1"), out, in_ch, size + 2, 3, stride),
                &[&prev],
            ));
            ls.push(conv(&format!("{p}_c2"), out, out, size_out + 2, 3, 1));
            let shortcut = if in_ch != out {
                ls.push(deps(pw(&format!("{p}_down"), out, in_ch, size_out), &[&prev]));
                format!("{p}_down")
            } else {
                prev.clone()
            };
            ls.push(elem(
                &format!("{p}_add"),
                out,
                size_out,
                &[&format!("{p}_c2"), &shortcut],
            ));
            prev = format!("{p}_add");
            in_ch = out;
            size = size_out;
        }
    }
    // SSD feature pyramid
    ls.push(deps(pw("e1a", 256, 256, 75), &[&prev]));
    ls.push(conv("e1b", 512, 256, 77, 3, 2)); // -> 38
    ls.push(pw("e2a", 256, 512, 38));
    ls.push(conv("e2b", 512, 256, 40, 3, 2)); // -> 19
    ls.push(pw("e3a", 128, 512, 19));
    ls.push(conv("e3b", 256, 128, 21, 3, 2)); // -> 10
    ls.push(pw("e4a", 128, 256, 10));
    ls.push(conv("e4b", 256, 128, 12, 3, 2)); // -> 5
    // detection heads on the two largest feature maps
    ls.push(deps(conv("h38_loc", 16, 512, 40, 3, 1), &["e1b"]));
    ls.push(deps(conv("h38_conf", 324, 512, 40, 3, 1), &["e1b"]));
    ls.push(deps(conv("h19_loc", 24, 512, 21, 3, 1), &["e2b"]));
    ls.push(deps(conv("h19_conf", 486, 512, 21, 3, 1), &["e2b"]));
    RawModel {
        name: "ssd_resnet34".into(),
        batch: 1,
        layer: ls,
    }
}

/// SSD detector on a MobileNetV1 backbone (300x300 input).
pub fn ssd_mobilenet_v1() -> RawModel {
    let (mut ls, ch, size) = mobilenet_v1_layers("", 300);
    debug_assert_eq!((ch, size), (1024, 10));
    ls.push(pw("e1a", 256, 1024, 10));
    ls.push(conv("e1b", 512, 256, 12, 3, 2)); // -> 5
    ls.push(pw("e2a", 128, 512, 5));
    ls.push(conv("e2b", 256, 128, 7, 3, 2)); // -> 3
    ls.push(pw("e3a", 128, 256, 3));
    ls.push(conv("e3b", 256, 128, 5, 3, 2)); // -> 2
    ls.push(pw("e4a", 64, 256, 2));
    ls.push(conv("e4b", 128, 64, 4, 3, 2)); // -> 1
    ls.push(deps(conv("h19_loc", 24, 512, 21, 3, 1), &["ds11_pw"]));
    ls.push(deps(conv("h19_conf", 546, 512, 21, 3, 1), &["ds11_pw"]));
    ls.push(deps(conv("h10_loc", 24, 1024, 12, 3, 1), &["ds13_pw"]));
    ls.push(deps(conv("h10_conf", 546, 1024, 12, 3, 1), &["ds13_pw"]));
    RawModel {
        name: "ssd_mobilenet_v1".into(),
        batch: 1,
        layer: ls,
    }
}

/// GNMT-style recurrent translator flattened to a fully-connected
/// sequence: per-step LSTM gate projections as FC layers.
pub fn gnmt() -> RawModel {
    let mut ls = Vec::new();
    for i in 1..=8 {
        ls.push(fc(&format!("enc{i}"), 4096, 2048));
    }
    ls.push(fc("att", 1024, 2048));
    for i in 1..=8 {
        ls.push(fc(&format!("dec{i}"), 4096, 2048));
    }
    ls.push(fc("proj", 8192, 1024));
    RawModel {
        name: "gnmt".into(),
        batch: 1,
        layer: ls,
    }
}

/// Hand-pose regression net: small conv stack fanning out into parallel
/// per-finger fully-connected branches.
pub fn brq_handpose() -> RawModel {
    let mut ls = vec![
        conv("conv1", 32, 1, 64, 5, 1),  // -> 60, pooled to 30
        conv("conv2", 64, 32, 30, 5, 1), // -> 26, pooled to 13
        conv("conv3", 128, 64, 13, 3, 1), // -> 11, pooled to 5
        conv("conv4", 1024, 128, 5, 5, 1), // -> 1
        fc("fc1", 1024, 1024),
    ];
    for i in 1..=5 {
        ls.push(deps(fc(&format!("fc_br{i}"), 1024, 1024), &["fc1"]));
    }
    ls.push(deps(
        fc("fc_out", 63, 1024),
        &["fc_br1", "fc_br2", "fc_br3", "fc_br4", "fc_br5"],
    ));
    RawModel {
        name: "brq_handpose".into(),
        batch: 1,
        layer: ls,
    }
}

/// Single-image depth estimation: VGG-style encoder, two wide FC layers,
/// and an up-convolution decoder.
pub fn depthnet() -> RawModel {
    let mut ls = Vec::new();
    let groups: [(u64, u64, usize, u64); 5] = [
        (64, 3, 2, 226),
        (128, 64, 2, 114),
        (256, 128, 3, 58),
        (512, 256, 3, 30),
        (512, 512, 3, 16),
    ];
    for (gi, (out, in0, convs, y)) in groups.into_iter().enumerate() {
        let mut in_ch = in0;
        for ci in 0..convs {
            ls.push(conv(&format!("c{}_{}", gi + 1, ci + 1), out, in_ch, y, 3, 1));
            in_ch = out;
        }
    }
    ls.push(fc("fc1", 4096, 512));
    ls.push(fc("fc2", 4096, 4096));
    ls.push(up("up1", 128, 256, 4, 2, 2)); // -> 7
    ls.push(up("up2", 64, 128, 7, 2, 2)); // -> 13
    ls.push(up("up3", 32, 64, 13, 2, 2)); // -> 25
    ls.push(up("up4", 16, 32, 25, 2, 2)); // -> 49
    ls.push(pw("out", 1, 16, 49));
    RawModel {
        name: "depthnet".into(),
        batch: 1,
        layer: ls,
    }
}

fn with_batch(mut model: RawModel, batch: u32) -> RawModel {
    model.batch = batch;
    model
}

pub fn raw_arvr_a() -> RawWorkload {
    RawWorkload {
        model: vec![
            with_batch(resnet50(), 2),
            with_batch(unet(), 4),
            with_batch(mobilenet_v2(), 4),
        ],
    }
}

pub fn raw_arvr_b() -> RawWorkload {
    RawWorkload {
        model: vec![
            with_batch(resnet50(), 2),
            with_batch(unet(), 2),
            with_batch(mobilenet_v2(), 4),
            with_batch(brq_handpose(), 2),
            with_batch(depthnet(), 2),
        ],
    }
}

pub fn raw_mlperf(batch: u32) -> RawWorkload {
    RawWorkload {
        model: vec![
            with_batch(resnet50(), batch),
            with_batch(mobilenet_v1(), batch),
            with_batch(ssd_resnet34(), batch),
            with_batch(ssd_mobilenet_v1(), batch),
            with_batch(gnmt(), batch),
        ],
    }
}

pub fn arvr_a() -> Workload {
    Workload::from_raw(raw_arvr_a()).expect("bundled fixture is valid")
}

pub fn arvr_b() -> Workload {
    Workload::from_raw(raw_arvr_b()).expect("bundled fixture is valid")
}

pub fn mlperf(batch: u32) -> Workload {
    Workload::from_raw(raw_mlperf(batch)).expect("bundled fixture is valid")
}

/// Resolves a bundled fixture by name (`arvr-a`, `arvr-b`, `mlperf`).
pub fn by_name(name: &str) -> Option<Workload> {
    match name.to_ascii_lowercase().replace('_', "-").as_str() {
        "arvr-a" => Some(arvr_a()),
        "arvr-b" => Some(arvr_b()),
        "mlperf" => Some(mlperf(1)),
        _ => None,
    }
}

pub const FIXTURE_NAMES: [&str; 3] = ["arvr-a", "arvr-b", "mlperf"];
