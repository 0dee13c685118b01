# Codeword Overlap Library Package
