# expect: none
from qiskit import ClassicalRegister, QuantumCircuit, QuantumRegister, transpile


class Ghz:
    def __init__(self, n):
        self.n = n

    def circuit(self):
        qc = QuantumCircuit(self.n, self.n)
        qc.h(0)
        for i in range(self.n - 1):
            qc.cx(i, i + 1)
        qc.measure(range(self.n), range(self.n))
        return qc
