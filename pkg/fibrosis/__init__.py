"""One-shot GAN pipeline for quantifying fibrosis in SHG heart images"""
