int scale(int x, int y) {
    return x * y + 1;
}

int donor_6(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i2 = 0; i2 < 16; i2++) { acc = a[i2] * t; for (int i1 = 0; i1 < 16; i1++) { t += b[i1] * 5; acc += a[i1] * k; } }
    return acc + t;
}
