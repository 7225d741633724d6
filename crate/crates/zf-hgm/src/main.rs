fn main() {
    std::process::exit(zf_hgm::cli::run());
}
