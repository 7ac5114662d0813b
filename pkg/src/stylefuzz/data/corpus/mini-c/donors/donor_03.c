int donor_3(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    acc = k - 5;
    for (int i1 = 0; i1 < 16; i1++) { k += k * k; }
    for (int i2 = 0; i2 < 16; i2++) { k += a[i2] + acc; }
    for (int i3 = 0; i3 < 16; i3++) { acc = b[i3] - t; }
    return acc + t;
}
