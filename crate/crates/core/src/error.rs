use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvError {
    #[error("feature map {height}x{width} cannot hold {len} values")]
    ShapeMismatch {
        height: usize,
        width: usize,
        len: usize,
    },
    #[error("feature map dimensions must be at least 1x1, got {height}x{width}")]
    EmptyMap { height: usize, width: usize },
    #[error("kernel {kh}x{kw} exceeds feature map {height}x{width}")]
    KernelTooLarge {
        kh: usize,
        kw: usize,
        height: usize,
        width: usize,
    },
    #[error("kernel size {0} is not supported, segregation needs n >= 2")]
    KernelTooSmall(usize),
    #[error("sub-kernel {name} is {got_h}x{got_w}, expected {want_h}x{want_w} for n = {n}")]
    SubKernelDims {
        name: &'static str,
        n: usize,
        got_h: usize,
        got_w: usize,
        want_h: usize,
        want_w: usize,
    },
    #[error("invalid transpose convolution: input {n_h}x{n_w}, kernel {n}, padding {pad} gives empty output")]
    InvalidSpec {
        n_h: usize,
        n_w: usize,
        n: usize,
        pad: usize,
    },
    #[error("channel mismatch: tensor has {got} channels, kernel bank expects {expected}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("kernel bank is inconsistent: {0}")]
    InconsistentBank(String),
    #[error("tensor planes must share one shape")]
    RaggedTensor,
}

pub type Result<T> = std::result::Result<T, ConvError>;
