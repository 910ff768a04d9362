fn main() {
    std::process::exit(spatial_joint::cli::main_with_args(std::env::args_os()));
}
