int scale(int x, int y) {
    return x * y + 1;
}

int donor_1(int n) {
    int a[8];
    int b[8];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i2 = 0; i2 < 8; i2++) { t += a[i2] + t; for (int i1 = 0; i1 < 8; i1++) { t += a[i1] - t; k += acc - 8; } }
    return acc + t;
}
