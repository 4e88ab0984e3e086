use serde::Serialize;

/// Observed convergence order between two resolutions `h` and `h/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub residual_h: f64,
    pub residual_h2: f64,
    /// `log₂(residual_h / residual_h2)`; `None` when a residual sits at the roundoff floor.
    pub order: Option<f64>,
}

impl OrderEstimate {
    /// Both residuals at the roundoff floor: the discretization is exact for this input.
    pub fn is_exact(&self) -> bool {
        self.order.is_none()
    }

    pub fn order_in(&self, lo: f64, hi: f64) -> bool {
        matches!(self.order, Some(p) if p >= lo && p <= hi)
    }
}

/// Residuals at or below this are treated as roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e-11;

pub fn estimate_order(res_h: f64, res_h2: f64) -> OrderEstimate {
    let order = if res_h <= ROUNDOFF_FLOOR || res_h2 <= ROUNDOFF_FLOOR {
        None
    } else {
        Some((res_h / res_h2).log2())
    };
    OrderEstimate {
        residual_h: res_h,
        residual_h2: res_h2,
        order,
    }
}

/// Residual sequence over a refinement ladder `h, h/2, h/4, …`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    pub orders: Vec<OrderEstimate>,
}

impl Convergence {
    pub fn from_ladder(spacings: Vec<f64>, residuals: Vec<f64>) -> Self {
        let orders = residuals
            .windows(2)
            .map(|w| estimate_order(w[0], w[1]))
            .collect();
        Convergence {
            spacings,
            residuals,
            orders,
        }
    }

    /// Either every step is at the roundoff floor, or every observed order lies in `[lo, hi]`.
    pub fn passes(&self, lo: f64, hi: f64) -> bool {
        self.all_exact() || self.orders.iter().all(|o| o.order_in(lo, hi))
    }

    pub fn all_exact(&self) -> bool {
        self.residuals.iter().all(|r| *r <= ROUNDOFF_FLOOR)
    }
}
