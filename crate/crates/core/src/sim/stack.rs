/// Fixed-depth observation history, newest frame first.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    frame_len: usize,
    depth: usize,
    data: Vec<f32>,
}

impl FrameStack {
    pub fn new(frame_len: usize, depth: usize) -> Self {
        Self {
            frame_len,
            depth,
            data: vec![0.0; frame_len * depth],
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Overwrites every slot with `frame`.
    pub fn fill(&mut self, frame: &[f32]) {
        debug_assert_eq!(frame.len(), self.frame_len);
        for slot in self.data.chunks_exact_mut(self.frame_len.max(1)) {
            slot.copy_from_slice(frame);
        }
    }

    /// Shifts older frames back one slot and writes `frame` at the front.
    pub fn push(&mut self, frame: &[f32]) {
        debug_assert_eq!(frame.len(), self.frame_len);
        if self.depth == 0 {
            return;
        }
        self.data.copy_within(0..self.frame_len * (self.depth - 1), self.frame_len);
        self.data[..self.frame_len].copy_from_slice(frame);
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Frame `k` back in time (0 = newest).
    pub fn frame(&self, k: usize) -> &[f32] {
        &self.data[k * self.frame_len..(k + 1) * self.frame_len]
    }
}
