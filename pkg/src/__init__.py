# KAN diffusion low-light enhancement package
