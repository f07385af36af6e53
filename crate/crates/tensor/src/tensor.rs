use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::Real;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

pub(crate) fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// How a tensor was produced. Interior nodes keep handles to their inputs so
/// the backward pass can walk the graph without a separate tape structure.
#[derive(Clone)]
pub(crate) enum Op {
    Leaf,
    Matmul(Tensor, Tensor),
    Transpose(Tensor),
    Add(Tensor, Tensor),
    AddBias(Tensor, Tensor),
    AddConst(Tensor),
    MulElem(Tensor, Tensor),
    Scale(Tensor, Real),
    Sigmoid(Tensor),
    Silu(Tensor),
    LayerNorm {
        x: Tensor,
        gamma: Tensor,
        beta: Tensor,
        eps: Real,
    },
    Conv1d {
        x: Tensor,
        kernel: Tensor,
        bias: Option<Tensor>,
        k: usize,
        stride: usize,
        padding: usize,
    },
    DepthwiseConv1d {
        x: Tensor,
        kernel: Tensor,
        bias: Option<Tensor>,
        padding: usize,
    },
    Rotary {
        x: Tensor,
        positions: Vec<usize>,
        base: Real,
    },
    SoftmaxRows(Tensor),
    SoftmaxXent {
        logits: Tensor,
        targets: Vec<Option<usize>>,
    },
    SumAll(Tensor),
    ColSlice {
        x: Tensor,
        start: usize,
        len: usize,
    },
    ConcatCols(Vec<Tensor>),
    MaskRows {
        base: Tensor,
        replacement: Tensor,
        mask: Vec<bool>,
    },
    SequenceEmbed {
        table: Tensor,
        speech: Option<Tensor>,
        items: Vec<crate::SeqItem>,
    },
}

pub(crate) struct Node {
    pub id: u64,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Real>,
    pub requires_grad: bool,
    pub op: Op,
}

/// A row-major `rows x cols` matrix. Cheap to clone (shared backing store);
/// immutable once created.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) inner: Arc<Node>,
}

impl Tensor {
    pub(crate) fn new_node(
        rows: usize,
        cols: usize,
        data: Vec<Real>,
        requires_grad: bool,
        op: Op,
        op_name: &str,
    ) -> Tensor {
        assert_eq!(
            rows * cols,
            data.len(),
            "{op_name}: shape {rows}x{cols} does not match buffer length {}",
            data.len()
        );
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                panic!("{op_name}: non-finite value {v} at flat index {i} in {rows}x{cols} output");
            }
        }
        Tensor {
            inner: Arc::new(Node {
                id: fresh_id(),
                rows,
                cols,
                data,
                requires_grad,
                op,
            }),
        }
    }

    /// Constant leaf (no gradient).
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Real>) -> Tensor {
        Tensor::new_node(rows, cols, data, false, Op::Leaf, "from_vec")
    }

    /// Leaf that participates in differentiation.
    pub fn param(rows: usize, cols: usize, data: Vec<Real>) -> Tensor {
        Tensor::new_node(rows, cols, data, true, Op::Leaf, "param")
    }

    pub fn leaf(rows: usize, cols: usize, data: Vec<Real>, requires_grad: bool) -> Tensor {
        Tensor::new_node(rows, cols, data, requires_grad, Op::Leaf, "leaf")
    }

    pub fn zeros(rows: usize, cols: usize) -> Tensor {
        Tensor::from_vec(rows, cols, vec![0.0; rows * cols])
    }

    pub fn full(rows: usize, cols: usize, value: Real) -> Tensor {
        Tensor::from_vec(rows, cols, vec![value; rows * cols])
    }

    pub fn scalar(value: Real) -> Tensor {
        Tensor::from_vec(1, 1, vec![value])
    }

    pub fn identity(n: usize) -> Tensor {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Tensor::from_vec(n, n, data)
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn rows(&self) -> usize {
        self.inner.rows
    }

    pub fn cols(&self) -> usize {
        self.inner.cols
    }

    pub fn numel(&self) -> usize {
        self.inner.rows * self.inner.cols
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    pub fn data(&self) -> &[Real] {
        &self.inner.data
    }

    pub fn at(&self, r: usize, c: usize) -> Real {
        assert!(
            r < self.rows() && c < self.cols(),
            "index ({r},{c}) out of bounds for {}x{} tensor",
            self.rows(),
            self.cols()
        );
        self.inner.data[r * self.cols() + c]
    }

    pub fn row(&self, r: usize) -> &[Real] {
        assert!(r < self.rows(), "row {r} out of bounds for {} rows", self.rows());
        &self.inner.data[r * self.cols()..(r + 1) * self.cols()]
    }

    /// Value of a 1x1 tensor.
    pub fn item(&self) -> Real {
        assert!(
            self.numel() == 1,
            "item() requires a scalar tensor, got {}x{}",
            self.rows(),
            self.cols()
        );
        self.inner.data[0]
    }

    pub(crate) fn op(&self) -> &Op {
        &self.inner.op
    }
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Tensor[{}x{}, grad={}, id={}]",
            self.rows(),
            self.cols(),
            self.requires_grad(),
            self.id()
        )
    }
}
