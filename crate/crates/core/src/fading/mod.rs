//! Relay power allocation under Rayleigh fading.

mod channel;
mod planner;
mod relay;
mod waterfill;

pub use channel::{
    draw_slot_gains, fwd_slot_throughput, nc_slot_throughput, ConstantGains, FadingConfig,
    GainSource, GainTape, PowerConfig, RayleighGains, ScriptedGains,
};
pub use planner::{
    causal_allocate_slot, plan_slot, FutureGains, Horizon, MeanFuture, SlotDemand, SlotPlan,
};
pub use relay::{
    run_relay, Knowledge, Mode, RelayBuffers, RelayOptions, RelayOutcome, Strategy, TraceRow,
};
pub use waterfill::{noncausal_min_slots, waterfill, waterfill_current_and_uniform, PowerAllocation};
