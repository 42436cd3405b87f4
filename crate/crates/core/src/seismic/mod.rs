//! Seismic sections: I/O, synthesis, trace corruption, patch corpora and
//! sliding-window denoising.

mod corrupt;
mod denoise;
mod patch;
mod section;
mod synth;

pub use corrupt::{corrupt_traces, spaced_trace_indices, NoisyTraceSpec, Sinusoid, TraceCorruption};
pub use denoise::{coverage_counts, denoise_section};
pub use patch::{
    build_patch_dataset, extract_patch, Normalizer, Patch, PatchPlan, PatchSample, DEFAULT_PATCH_WIDTH,
};
pub use section::{
    load_section, save_section, section_amax, section_from_binary, section_from_text, section_to_binary,
    section_to_text, SectionFormat, SeismicSection, SECTION_BINARY_MAGIC, SECTION_TEXT_MAGIC,
};
pub use synth::{ricker, synth_clean_section, EventSpec, LinearEvent};
