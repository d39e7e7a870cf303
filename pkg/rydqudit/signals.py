from django.dispatch import Signal

# kwargs: problem, result
pulse_optimized = Signal()
# kwargs: duration, fidelity
scan_point_finished = Signal()
# kwargs: result
benchmark_finished = Signal()
