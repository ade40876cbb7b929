pub mod dummy;
pub mod fit;
pub mod logistic;

pub use dummy::{dummy_design, dummy_logistic_fit, dummy_logistic_model, DummyFit};
pub use fit::{glm_os_fit, update_betak_glm, update_vk_glm, FitOptions};
pub use logistic::{gradient_hessian, logistic_pi, neg_loglik};
