pub mod panel_bem;
