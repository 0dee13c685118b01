# Codeword Overlap Benchmark Package
