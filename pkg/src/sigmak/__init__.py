"""sigma_k curvature equations on flat tori."""
