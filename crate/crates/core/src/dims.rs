use crate::error::{invalid, Result};

/// Array, block and pulse-support sizes of one design instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_users: usize,
    pub block_len: usize,
    pub taps: usize,
    pub half_width: usize,
}

impl Dimensions {
    pub fn new(
        n_tx: usize,
        n_rx: usize,
        n_users: usize,
        block_len: usize,
        taps: usize,
        half_width: usize,
    ) -> Result<Self> {
        let dims = Self {
            n_tx,
            n_rx,
            n_users,
            block_len,
            taps,
            half_width,
        };
        dims.validate()?;
        Ok(dims)
    }

    /// Full check, including the `K < N_t` model assumption.
    pub fn validate(&self) -> Result<()> {
        self.validate_sizes()?;
        if self.n_users >= self.n_tx {
            return Err(invalid(
                "n_users",
                alloc::format!(
                    "the model assumes K < N_t (got K = {}, N_t = {})",
                    self.n_users,
                    self.n_tx
                ),
            ));
        }
        Ok(())
    }

    /// Positivity of every size; enough for the matrix constructions.
    pub fn validate_sizes(&self) -> Result<()> {
        for (name, v) in [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("n_users", self.n_users),
            ("block_len", self.block_len),
            ("taps", self.taps),
            ("half_width", self.half_width),
        ] {
            if v == 0 {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// `L + 2Q`, the length of one pulse-shaped stream.
    pub fn l0(&self) -> usize {
        self.block_len + 2 * self.half_width
    }

    /// `L + 2Q + P - 1`, the length after the multipath convolution.
    pub fn l1(&self) -> usize {
        self.l0() + self.taps - 1
    }

    /// Number of complex transmit unknowns, `N_t L`.
    pub fn n_symbols(&self) -> usize {
        self.n_tx * self.block_len
    }

    /// Number of received data symbols, `K L`.
    pub fn n_received(&self) -> usize {
        self.n_users * self.block_len
    }

    /// Columns of the lifted radar waveform, `N_t P`.
    pub fn sensing_width(&self) -> usize {
        self.n_tx * self.taps
    }
}
